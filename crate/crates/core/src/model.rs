//! Parameters, regimes and the one-step law of the random-trend diffusion model.
//!
//! Each new decision maker draws a latent trend `Y` from `{+1, -1, 0}` with
//! probabilities `(alpha, beta, 1 - alpha - beta)` and then adopts opinion `A`
//! with probability `a + b * Y * N / (N + M)`. Averaging over `Y` gives the
//! success probability `a + lambda2 * N / (N + M)` with `lambda2 = b (alpha - beta)`,
//! the second eigenvalue of the mean replacement matrix.

use core::fmt;

use crate::error::{Constraint, Error, Result};

/// Slack allowed on the `alpha + beta <= 1` and `a + b <= 1` checks so that
/// parameters built by arithmetic (e.g. `a = theta * p`, `b = 1 - theta`) are not
/// rejected over a rounding ulp.
pub const SUM_SLACK: f64 = 1e-12;

/// Absolute tolerance of the `lambda2 == 1/2` test.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// `|1 - lambda2|` below this means the two eigenvalues of the mean replacement
/// matrix coincide.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

/// Validated model parameters.
///
/// `lambda2` is computed once at construction and every regime-sensitive
/// computation reads it from here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    n0: u64,
    m0: u64,
    lambda2: f64,
}

/// Phase of the model, determined by `lambda2` against `1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Diffusive,
    Critical,
    Superdiffusive,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Diffusive => "diffusive",
            Regime::Critical => "critical",
            Regime::Superdiffusive => "superdiffusive",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The latent trend of one decision maker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trend {
    /// `Y = +1`
    Follower,
    /// `Y = -1`
    Against,
    /// `Y = 0`
    Indifferent,
}

impl Trend {
    pub const ALL: [Trend; 3] = [Trend::Follower, Trend::Against, Trend::Indifferent];

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Trend::Follower => 1.0,
            Trend::Against => -1.0,
            Trend::Indifferent => 0.0,
        }
    }
}

fn unit(name: &'static str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Constraint::OutOfUnitInterval(name).into())
    }
}

/// Validates a raw parameter tuple. See [`ModelParams::new`].
pub fn validate_params(a: f64, b: f64, alpha: f64, beta: f64, n0: u64, m0: u64) -> Result<ModelParams> {
    ModelParams::new(a, b, alpha, beta, n0, m0)
}

impl ModelParams {
    /// Checks every model constraint and computes `lambda2`.
    ///
    /// `alpha` and `beta` are accepted on the closed interval; `beta = 0` and
    /// `beta = 1` are both used by named special cases of the model.
    pub fn new(a: f64, b: f64, alpha: f64, beta: f64, n0: u64, m0: u64) -> Result<Self> {
        let a = unit("a", a)?;
        let b = unit("b", b)?;
        let alpha = unit("alpha", alpha)?;
        let beta = unit("beta", beta)?;
        if alpha + beta > 1.0 + SUM_SLACK {
            return Err(Constraint::TrendMassExceedsOne.into());
        }
        if a + b > 1.0 + SUM_SLACK {
            return Err(Constraint::CouplingExceedsOne.into());
        }
        if beta != 0.0 && b > a {
            return Err(Constraint::CouplingExceedsOffset.into());
        }
        if n0 == 0 && m0 == 0 {
            return Err(Constraint::EmptyInitialPopulation.into());
        }
        Ok(ModelParams { a, b, alpha, beta, n0, m0, lambda2: b * (alpha - beta) })
    }

    /// Same parameters with a different initial population.
    pub fn with_initial(&self, n0: u64, m0: u64) -> Result<Self> {
        Self::new(self.a, self.b, self.alpha, self.beta, n0, m0)
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }
    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }
    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }
    #[inline]
    pub fn n0(&self) -> u64 {
        self.n0
    }
    #[inline]
    pub fn m0(&self) -> u64 {
        self.m0
    }
    #[inline]
    pub fn initial_total(&self) -> u64 {
        self.n0 + self.m0
    }
    /// `b (alpha - beta)`.
    #[inline]
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Probability of each trend value.
    pub fn trend_prob(&self, y: Trend) -> f64 {
        match y {
            Trend::Follower => self.alpha,
            Trend::Against => self.beta,
            Trend::Indifferent => (1.0 - self.alpha - self.beta).max(0.0),
        }
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }
}

pub fn classify_regime(params: &ModelParams) -> Regime {
    let d = params.lambda2() - 0.5;
    if d.abs() <= CRITICAL_TOLERANCE {
        Regime::Critical
    } else if d < 0.0 {
        Regime::Diffusive
    } else {
        Regime::Superdiffusive
    }
}

/// `P(X = 1 | Y = y, proportion)` = `a + b y x`, clamped to `[0, 1]` against rounding.
pub fn conditional_success_prob(params: &ModelParams, y: Trend, proportion: f64) -> f64 {
    (params.a + params.b * y.value() * proportion).clamp(0.0, 1.0)
}

/// Counts after some number of decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PopulationState {
    pub n_count: u64,
    pub m_count: u64,
    pub step: u64,
}

impl PopulationState {
    pub fn initial(params: &ModelParams) -> Self {
        PopulationState { n_count: params.n0, m_count: params.m0, step: 0 }
    }

    /// Builds a state and checks it is reachable from `params`' seeds.
    pub fn new(params: &ModelParams, n_count: u64, m_count: u64, step: u64) -> Result<Self> {
        let state = PopulationState { n_count, m_count, step };
        if state.is_consistent_with(params) {
            Ok(state)
        } else {
            Err(Error::DomainError("state counts are inconsistent with the initial population"))
        }
    }

    pub fn is_consistent_with(&self, params: &ModelParams) -> bool {
        self.n_count >= params.n0
            && self.m_count >= params.m0
            && self.n_count + self.m_count == params.initial_total() + self.step
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.n_count + self.m_count
    }

    /// Current proportion of `A` decisions.
    #[inline]
    pub fn proportion(&self) -> f64 {
        self.n_count as f64 / self.total() as f64
    }
}

/// Success probability averaged over the trend: `a + lambda2 N / (N + M)`.
pub fn mean_success_prob(params: &ModelParams, state: &PopulationState) -> f64 {
    (params.a + params.lambda2 * state.proportion()).clamp(0.0, 1.0)
}

/// Almost-sure limits of `N_n / (N_n + M_n)` and `M_n / (N_n + M_n)`.
///
/// `lambda2 = 1` is reachable (`a = 0, b = 1, alpha = 1, beta = 0`, the classical
/// Pólya urn); its limit proportion is random, so this returns
/// [`Error::DegenerateSpectrum`] there.
pub fn limiting_proportions(params: &ModelParams) -> Result<(f64, f64)> {
    let denom = 1.0 - params.lambda2;
    if denom.abs() < DEGENERATE_TOLERANCE {
        return Err(Error::DegenerateSpectrum);
    }
    Ok((params.a / denom, (1.0 - params.a - params.lambda2) / denom))
}
