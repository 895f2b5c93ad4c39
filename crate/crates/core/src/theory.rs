//! Limit quantities of the model viewed as a two-colour generalized Pólya urn.
//!
//! The mean replacement matrix is
//!
//! ```text
//! A = [[a + λ2, a], [1 - a - λ2, 1 - a]]
//! ```
//!
//! with spectrum `{1, λ2}`. Right eigenvectors `v1 = (a, 1 - a - λ2) / (1 - λ2)`,
//! `v2 = (1, -1) / (1 - λ2)` and left eigenvectors `u1 = (1, 1)`,
//! `u2 = (1 - a - λ2, -a)` are biorthonormal, so `A = P1 + λ2 P2` with spectral
//! projectors `Pi = vi ui`. Every covariance below is a multiple of
//! `[[1, -1], [-1, 1]]`: the total count is deterministic.

use crate::error::{Error, Result};
use crate::linalg::{Matrix2, Vector2};
use crate::model::{limiting_proportions, ModelParams, Regime, DEGENERATE_TOLERANCE};
use crate::quadrature::{doubling_schedule, GaussLaguerre, GaussLegendre};
use crate::special::gamma;

/// First Gauss–Laguerre rule tried by [`sigma1_integral`] for the tail.
pub const LAGUERRE_START_NODES: usize = 64;
/// Largest rule [`sigma1_integral`] will build before giving up.
pub const LAGUERRE_MAX_NODES: usize = 4096;

pub fn mean_replacement_matrix(params: &ModelParams) -> Matrix2 {
    let a = params.a();
    let l2 = params.lambda2();
    Matrix2::new(a + l2, a, 1.0 - a - l2, 1.0 - a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenStructure {
    pub lambda1: f64,
    pub lambda2: f64,
    pub v1: Vector2,
    pub v2: Vector2,
    pub u1: Vector2,
    pub u2: Vector2,
}

impl EigenStructure {
    /// Spectral projector `v_i u_i` for `i` in `{1, 2}`.
    pub fn projector(&self, i: usize) -> Matrix2 {
        match i {
            1 => self.v1.outer(self.u1),
            2 => self.v2.outer(self.u2),
            _ => panic!("eigen index must be 1 or 2"),
        }
    }

    /// `V` with the right eigenvectors as columns.
    pub fn right_matrix(&self) -> Matrix2 {
        Matrix2::from_columns(self.v1, self.v2)
    }

    /// `V^{-1}`, whose rows are the left eigenvectors.
    pub fn left_matrix(&self) -> Matrix2 {
        Matrix2([self.u1.0, self.u2.0])
    }

    /// `e^{sA} = V diag(e^{s}, e^{λ2 s}) V^{-1}`.
    pub fn exp(&self, s: f64) -> Matrix2 {
        let d = Matrix2::diag(libm::exp(self.lambda1 * s), libm::exp(self.lambda2 * s));
        self.right_matrix() * d * self.left_matrix()
    }
}

pub fn eigenstructure(params: &ModelParams) -> Result<EigenStructure> {
    let a = params.a();
    let l2 = params.lambda2();
    let gap = 1.0 - l2;
    if gap.abs() < DEGENERATE_TOLERANCE {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(EigenStructure {
        lambda1: 1.0,
        lambda2: l2,
        v1: Vector2::new(a / gap, (1.0 - a - l2) / gap),
        v2: Vector2::new(1.0 / gap, -1.0 / gap),
        u1: Vector2::new(1.0, 1.0),
        u2: Vector2::new(1.0 - a - l2, -a),
    })
}

/// `B = Σ_i v1_i E[ξ_i ξ_i^T] = diag(v1)`.
pub fn b_matrix(params: &ModelParams) -> Result<Matrix2> {
    let (pa, pb) = limiting_proportions(params)?;
    Ok(Matrix2::diag(pa, pb))
}

/// `ψ_A(s) = e^{sA} - v1 (1 1) ∫_0^s e^{tA} dt`.
///
/// With `e^{sA} = e^{s} P1 + e^{λ2 s} P2`, `∫_0^s e^{tA} dt = (e^{s} - 1) P1 + …`,
/// `P1^2 = P1` and `P1 P2 = 0`, this collapses to `P1 + e^{λ2 s} P2`.
pub fn psi_a(params: &ModelParams, s: f64) -> Result<Matrix2> {
    psi_a_scaled(params, s, 0.0)
}

/// `e^{ln_scale} ψ_A(s)`, evaluated without forming `ψ_A(s)` itself so that
/// large `s` with a large negative `ln_scale` neither overflows nor cancels.
pub fn psi_a_scaled(params: &ModelParams, s: f64, ln_scale: f64) -> Result<Matrix2> {
    let eig = eigenstructure(params)?;
    Ok(psi_from_projectors(&eig.projector(1), &eig.projector(2), eig.lambda2, s, ln_scale))
}

#[inline]
fn psi_from_projectors(p1: &Matrix2, p2: &Matrix2, lambda2: f64, s: f64, ln_scale: f64) -> Matrix2 {
    p1.scale(libm::exp(ln_scale)) + p2.scale(libm::exp(lambda2 * s + ln_scale))
}

fn require(params: &ModelParams, want: Regime) -> Result<()> {
    let found = params.regime();
    if found == want {
        Ok(())
    } else {
        Err(Error::RegimeMismatch { expected: want.name(), found })
    }
}

/// Scalar `σ²` of the diffusive covariance `Σ1 = σ² [[1, -1], [-1, 1]]`.
pub fn sigma1_scalar(params: &ModelParams) -> Result<f64> {
    require(params, Regime::Diffusive)?;
    let a = params.a();
    let l2 = params.lambda2();
    Ok(a * (1.0 - a - l2) / ((1.0 - l2) * (1.0 - l2) * (1.0 - 2.0 * l2)))
}

pub fn sigma1_closed(params: &ModelParams) -> Result<Matrix2> {
    Ok(Matrix2::CONTRAST.scale(sigma1_scalar(params)?))
}

/// Gauss–Legendre points per panel of the head interval.
const HEAD_PANEL_NODES: usize = 16;

/// `Σ1 = ∫_0^∞ ψ_A(s) B ψ_A(s)^T e^{-s} ds - v1 v1^T` by quadrature.
///
/// The integrand mixes decay rates `1`, `1 - λ2` and `1 - 2λ2`; near
/// criticality the last is tiny while the others are not, and no single
/// Laguerre scaling resolves both. The range is split at `L`, past which the
/// two fast parts are below `tol / 1000`. `[0, L]` gets Gauss–Legendre panels;
/// the tail is mapped to `s = L + x / r` with `r = 1 - 2 max(λ2, 0)` and handed
/// to the `e^{-x}` Gauss–Laguerre rule. Both rules double (64, 128, … Laguerre
/// nodes; 4, 8, … panels) until two successive estimates agree entrywise to
/// `tol / 10`.
pub fn sigma1_integral(params: &ModelParams, tol: f64) -> Result<Matrix2> {
    require(params, Regime::Diffusive)?;
    if !(tol > 0.0) {
        return Err(Error::DomainError("quadrature tolerance must be positive"));
    }
    let eig = eigenstructure(params)?;
    let b = b_matrix(params)?;
    let p1 = eig.projector(1);
    let p2 = eig.projector(2);
    let positive = eig.lambda2.max(0.0);
    let slow = 1.0 - 2.0 * positive;
    let ln_slow = libm::log(slow);
    // projector entries are bounded by 2, so every term is below 16 e^{-(1 - λ2) s}
    let head = libm::log(16e3 / tol) / (1.0 - positive);
    // e^{ln_scale} ψ(s) B ψ(s)^T, with the scale split over both ψ factors
    let term = |s: f64, ln_scale: f64| psi_from_projectors(&p1, &p2, eig.lambda2, s, 0.5 * ln_scale).congruence(&b);

    let mut previous: Option<Matrix2> = None;
    let mut last_diff = f64::INFINITY;
    let mut last_nodes = 0;
    let panel_rule = GaussLegendre::new(HEAD_PANEL_NODES)?;
    for (round, n) in doubling_schedule(LAGUERRE_START_NODES, LAGUERRE_MAX_NODES).enumerate() {
        let panels = 4usize << round;
        let width = head / panels as f64;
        let mut acc = Matrix2::ZERO;
        for k in 0..panels {
            for (s, w) in panel_rule.mapped(k as f64 * width, (k + 1) as f64 * width) {
                acc = acc + term(s, libm::log(w) - s);
            }
        }
        let rule = GaussLaguerre::new(n)?;
        for (&x, &lw) in rule.nodes().iter().zip(rule.ln_weights()) {
            let s = head + x / slow;
            acc = acc + term(s, lw + x - s - ln_slow);
        }
        if let Some(prev) = previous {
            last_diff = acc.max_abs_diff(&prev);
            if last_diff < tol / 10.0 {
                return Ok(acc - eig.v1.outer(eig.v1));
            }
        }
        previous = Some(acc);
        last_nodes = n;
    }
    Err(Error::QuadratureFailure { nodes: last_nodes, difference: last_diff })
}

/// Critical covariance by the projector route `(I - T1) P B P^T (I - T1)^T`
/// with `T1 = v1 (1 1)` and `P = v2 u2`.
pub fn sigma2_projector_route(params: &ModelParams) -> Result<Matrix2> {
    require(params, Regime::Critical)?;
    let eig = eigenstructure(params)?;
    let b = b_matrix(params)?;
    let t1 = eig.v1.outer(Vector2::new(1.0, 1.0));
    let p_half = eig.projector(2);
    Ok((Matrix2::IDENTITY - t1).congruence(&p_half.congruence(&b)))
}

/// `Σ2 = 2a(1 - 2a) [[1, -1], [-1, 1]]`.
pub fn sigma2_closed(params: &ModelParams) -> Result<Matrix2> {
    require(params, Regime::Critical)?;
    let a = params.a();
    Ok(Matrix2::CONTRAST.scale(2.0 * a * (1.0 - 2.0 * a)))
}

/// Critical covariance, computed by the projector route and checked against
/// the closed form.
pub fn sigma2_critical(params: &ModelParams) -> Result<Matrix2> {
    let via_projectors = sigma2_projector_route(params)?;
    let closed = sigma2_closed(params)?;
    debug_assert!(via_projectors.max_abs_diff(&closed) <= 1e-12, "Σ2 routes disagree");
    let _ = closed;
    Ok(via_projectors)
}

/// Centering vector `(2a, 1 - 2a)` of the critical functional limit. It is the
/// limiting proportion vector at `λ2 = 1/2`.
pub fn critical_centering(params: &ModelParams) -> Result<Vector2> {
    require(params, Regime::Critical)?;
    let (pa, pb) = limiting_proportions(params)?;
    debug_assert!((pa - 2.0 * params.a()).abs() <= 1e-11);
    Ok(Vector2::new(pa, pb))
}

/// `s Σ1 e^{log(t/s) A^T}`, the matrix-exponential form of the diffusive
/// functional covariance.
pub fn functional_covariance_via_exponential(params: &ModelParams, s: f64, t: f64) -> Result<Matrix2> {
    check_times(s, t)?;
    let sigma1 = sigma1_closed(params)?;
    let eig = eigenstructure(params)?;
    let exp_t = eig.exp(libm::log(t / s)).transpose();
    Ok((sigma1 * exp_t).scale(s))
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::DomainError("functional covariance needs s > 0"));
    }
    if !(t >= s) {
        return Err(Error::DomainError("functional covariance needs t >= s"));
    }
    Ok(())
}

/// `E(W_s W_t^T)` of the Gaussian functional limit, `0 < s <= t`.
///
/// Diffusive: `s (t/s)^{λ2} Σ1`. Critical (time index `n^t`): `2 s a (1 - 2a)`
/// times the contrast matrix, independent of `t`.
pub fn functional_covariance(params: &ModelParams, s: f64, t: f64) -> Result<Matrix2> {
    check_times(s, t)?;
    match params.regime() {
        Regime::Diffusive => {
            let sigma1 = sigma1_closed(params)?;
            let out = sigma1.scale(s * libm::pow(t / s, params.lambda2()));
            debug_assert!({
                let alt = functional_covariance_via_exponential(params, s, t)?;
                alt.max_abs_diff(&out) <= 1e-10 * (1.0 + out.max_abs())
            });
            Ok(out)
        }
        Regime::Critical => Ok(sigma2_critical(params)?.scale(s)),
        found @ Regime::Superdiffusive => Err(Error::RegimeMismatch { expected: "diffusive or critical", found }),
    }
}

/// First three moments of `Ŵ1` for the elephant parameterization
/// (`beta = 0`, `alpha = (1 - 2a) / b`, one initial `A`). `Ŵ2 = -Ŵ1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

pub fn elephant_w_moments(a: f64) -> Result<WMoments> {
    if !(a > 0.0 && a < 0.25) {
        return Err(Error::DomainError("elephant moments need 0 < a < 1/4"));
    }
    let c = (1.0 - 2.0 * a) * (1.0 - 2.0 * a) / (1.0 - 4.0 * a);
    Ok(WMoments {
        m1: 1.0 / (2.0 * gamma(2.0 * (1.0 - a))),
        m2: (1.0 + c) / (2.0 * gamma(3.0 - 4.0 * a)),
        m3: (1.0 + (5.0 - 2.0 * a) * c) / (2.0 * gamma(2.0 * (2.0 - 3.0 * a))),
    })
}

/// Parameters of the elephant reduction: `beta = 0`, `alpha = (1 - 2a) / b`,
/// a single initial `A` and no `B`.
pub fn elephant_params(a: f64, b: f64) -> Result<ModelParams> {
    if !(b > 0.0) {
        return Err(Error::DomainError("elephant reduction needs b > 0"));
    }
    ModelParams::new(a, b, (1.0 - 2.0 * a) / b, 0.0, 1, 0)
}

/// Limiting variance `p(1 - p) / (2θ - 1)` of the `√n`-scaled count when `θ > 1/2`.
pub fn heyde_variance(theta: f64, p: f64) -> Option<f64> {
    (theta > 0.5).then(|| p * (1.0 - p) / (2.0 * theta - 1.0))
}

/// Embeds the θ-mixture social-influence model (private preference `p` with
/// weight `θ`, social proportion with weight `1 - θ`) as `a = θp`, `b = 1 - θ`,
/// `alpha = 1`, `beta = 0`, seeded with one decision of each kind.
pub fn bhw_embedding(theta: f64, p: f64) -> Result<(ModelParams, Option<f64>)> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::DomainError("theta must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError("p must lie in [0, 1]"));
    }
    let params = ModelParams::new(theta * p, 1.0 - theta, 1.0, 0.0, 1, 1)?;
    Ok((params, heyde_variance(theta, p)))
}
