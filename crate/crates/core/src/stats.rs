//! Scaled fluctuations, scaling-exponent fits and moment diagnostics.
//!
//! Fluctuations are always centered at `n pA` with `pA` from the limit
//! proportions, never at the sample mean, and "variance" of a scaled sample
//! means its second moment about that centering.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix2;
use crate::model::{limiting_proportions, ModelParams, Regime};
use crate::moments::Moments;
use crate::sim::Ensemble;

/// Fluctuation scale at step `n`: `√n`, `√(n ln n)` or `n^{λ2}`.
pub fn fluctuation_scale(params: &ModelParams, n: u64) -> Result<f64> {
    let nf = n as f64;
    match params.regime() {
        Regime::Diffusive => {
            if n == 0 {
                return Err(Error::DomainError("scaling needs n >= 1"));
            }
            Ok(libm::sqrt(nf))
        }
        Regime::Critical => {
            if n < 2 {
                return Err(Error::DomainError("critical scaling needs n >= 2"));
            }
            Ok(libm::sqrt(nf * libm::log(nf)))
        }
        Regime::Superdiffusive => {
            if n == 0 {
                return Err(Error::DomainError("scaling needs n >= 1"));
            }
            Ok(libm::pow(nf, params.lambda2()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSample {
    pub step: u64,
    pub regime: Regime,
    pub centering: f64,
    pub scale: f64,
    pub values: Vec<f64>,
}

impl ScaledSample {
    /// Second moment about zero, i.e. about the theoretical centering.
    pub fn scaled_variance(&self) -> f64 {
        raw_moment(&self.values, 2)
    }

    /// `E x^k` over the sample (`k` in 1..=4), pairwise-summed.
    pub fn raw_moment(&self, k: u32) -> f64 {
        raw_moment(&self.values, k)
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        xs.iter().sum()
    } else {
        let (l, r) = xs.split_at(xs.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

fn ipow(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * x)
}

fn raw_moment(xs: &[f64], k: u32) -> f64 {
    let powers: Vec<f64> = xs.iter().map(|&x| ipow(x, k)).collect();
    pairwise_sum(&powers) / xs.len() as f64
}

/// Scales one column of counts observed at step `n`.
pub fn scale_counts(params: &ModelParams, n: u64, counts: &[u64]) -> Result<ScaledSample> {
    let (pa, _) = limiting_proportions(params)?;
    let scale = fluctuation_scale(params, n)?;
    let centering = n as f64 * pa;
    Ok(ScaledSample {
        step: n,
        regime: params.regime(),
        centering,
        scale,
        values: counts.iter().map(|&c| (c as f64 - centering) / scale).collect(),
    })
}

/// Regime-appropriate scaled sample at every snapshot.
pub fn scale_ensemble(ensemble: &Ensemble) -> Result<Vec<ScaledSample>> {
    ensemble.grid().iter().enumerate().map(|(s, &n)| scale_counts(&ensemble.params, n, ensemble.column(s))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub local_slope: f64,
}

/// Least-squares fit of `ln Var` against `ln n`, plus the slope over the last interval.
pub fn estimate_scaling_exponent(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::DomainError("scaling fit needs at least 4 points"));
    }
    if points.windows(2).any(|w| !(w[0].0 < w[1].0)) || points.iter().any(|&(n, v)| !(n > 0.0 && v > 0.0)) {
        return Err(Error::DomainError("scaling grid must be increasing with positive values"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (libm::log(n), libm::log(v))).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let (x1, y1) = logs[logs.len() - 2];
    let (x2, y2) = logs[logs.len() - 1];
    Ok(ScalingFit { points: points.to_vec(), slope, intercept: my - slope * mx, local_slope: (y2 - y1) / (x2 - x1) })
}

/// How snapshot counts are normalized before forming functional covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeChange {
    /// Snapshots at `⌊t n⌋`, every one divided by `√n`.
    Linear { n: u64 },
    /// Snapshots at `⌊n^t⌋`, the one at step `m` divided by `√(m ln n)`.
    Power { n: u64 },
}

/// `2 × 2` second-moment matrix of the scaled bivariate fluctuations at two
/// snapshots. The `B` component is the negated `A` component (the total is
/// deterministic), so the result is `c [[1, -1], [-1, 1]]` with `c` the mean
/// product of the `A` fluctuations.
pub fn empirical_covariance(ensemble: &Ensemble, first: usize, second: usize, time: TimeChange) -> Result<Matrix2> {
    let params = &ensemble.params;
    let regime = params.regime();
    if regime == Regime::Superdiffusive {
        return Err(Error::RegimeMismatch { expected: "diffusive or critical", found: regime });
    }
    let grid = ensemble.grid();
    if first >= grid.len() || second >= grid.len() {
        return Err(Error::DomainError("snapshot index out of range"));
    }
    let (pa, _) = limiting_proportions(params)?;
    let norm = |step: u64| -> Result<f64> {
        match time {
            TimeChange::Linear { n } if n >= 1 => Ok(libm::sqrt(n as f64)),
            TimeChange::Power { n } if n >= 2 && step >= 1 => Ok(libm::sqrt(step as f64 * libm::log(n as f64))),
            _ => Err(Error::DomainError("time change needs n >= 2 and positive steps")),
        }
    };
    let (s1, s2) = (grid[first], grid[second]);
    let (k1, k2) = (norm(s1)?, norm(s2)?);
    let (c1, c2) = (s1 as f64 * pa, s2 as f64 * pa);
    let products: Vec<f64> = ensemble
        .column(first)
        .iter()
        .zip(ensemble.column(second))
        .map(|(&x, &y)| ((x as f64 - c1) / k1) * ((y as f64 - c2) / k2))
        .collect();
    let c = pairwise_sum(&products) / products.len() as f64;
    Ok(Matrix2::CONTRAST.scale(c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDiagnostics {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    /// `√(6/R)`, the normal-theory standard error.
    pub se_skewness: f64,
    /// `√(24/R)`.
    pub se_kurtosis: f64,
    pub degenerate: bool,
    /// Skewness or excess kurtosis beyond three standard errors.
    pub non_normal: bool,
}

/// Relative variance below which a sample counts as constant.
const DEGENERATE_RELATIVE: f64 = 1e-24;

pub fn moment_diagnostics(values: &[f64]) -> MomentDiagnostics {
    let m = Moments::from_slice(values);
    let r = m.count() as f64;
    let variance = if m.count() > 0 { m.central(2) } else { 0.0 };
    let degenerate = m.count() < 2 || variance <= DEGENERATE_RELATIVE * m.mean() * m.mean();
    let (skewness, excess_kurtosis, se_variance) = if degenerate {
        (f64::NAN, f64::NAN, 0.0)
    } else {
        let m4 = m.central(4);
        (m.skewness(), m.excess_kurtosis(), libm::sqrt(((m4 - variance * variance) / r).max(0.0)))
    };
    let se_skewness = libm::sqrt(6.0 / r);
    let se_kurtosis = libm::sqrt(24.0 / r);
    let non_normal = !degenerate && (skewness.abs() > 3.0 * se_skewness || excess_kurtosis.abs() > 3.0 * se_kurtosis);
    MomentDiagnostics {
        count: m.count(),
        mean: m.mean(),
        variance,
        skewness,
        excess_kurtosis,
        se_mean: libm::sqrt(variance / r),
        se_variance,
        se_skewness,
        se_kurtosis,
        degenerate,
        non_normal,
    }
}

pub fn normality_diagnostics(sample: &ScaledSample) -> MomentDiagnostics {
    moment_diagnostics(&sample.values)
}

/// First three raw moments of `Z_n` with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZMoments {
    pub step: u64,
    pub count: u64,
    pub raw: [f64; 3],
    pub se: [f64; 3],
    pub diagnostics: MomentDiagnostics,
}

pub fn superdiffusive_moments(ensemble: &Ensemble, snapshot: usize) -> Result<ZMoments> {
    let params = &ensemble.params;
    let regime = params.regime();
    if regime != Regime::Superdiffusive {
        return Err(Error::RegimeMismatch { expected: Regime::Superdiffusive.name(), found: regime });
    }
    if snapshot >= ensemble.grid().len() {
        return Err(Error::DomainError("snapshot index out of range"));
    }
    let sample = scale_counts(params, ensemble.grid()[snapshot], ensemble.column(snapshot))?;
    let r = sample.values.len() as f64;
    let mut raw = [0.0; 3];
    let mut se = [0.0; 3];
    for k in 1..=3u32 {
        let mk = sample.raw_moment(k);
        let m2k = sample.raw_moment(2 * k);
        raw[k as usize - 1] = mk;
        se[k as usize - 1] = libm::sqrt(((m2k - mk * mk) / r).max(0.0));
    }
    Ok(ZMoments {
        step: sample.step,
        count: sample.values.len() as u64,
        raw,
        se,
        diagnostics: normality_diagnostics(&sample),
    })
}
