//! Exact law of `N_n` by forward dynamic programming.
//!
//! Averaging over the trend gives a birth chain on the `A`-count with
//! `P(N_{j+1} = k + 1 | N_j = k) = q_j(k) = a + λ2 k / T_j`, `T_j = n0 + m0 + j`.
//! Probabilities are carried as double-double numbers and the stay mass is
//! formed as `p - p q` rather than `p (1 - q)`, so total mass is conserved to
//! about 1e-30 per step.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest `n` accepted by [`exact_distribution`]; cost is `O(n^2)`.
pub const DEFAULT_EXACT_CAP: u64 = 8192;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline(always)]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline(always)]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    #[inline(always)]
    pub fn mul_f64(self, b: f64) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DoubleDouble { hi, lo }
    }

    #[inline(always)]
    pub fn add_f64(self, b: f64) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl core::ops::Add for DoubleDouble {
    type Output = DoubleDouble;

    #[inline(always)]
    fn add(self, o: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl core::ops::Sub for DoubleDouble {
    type Output = DoubleDouble;

    #[inline(always)]
    fn sub(self, o: DoubleDouble) -> DoubleDouble {
        self + DoubleDouble { hi: -o.hi, lo: -o.lo }
    }
}

/// Exact pmf of `N_n` on `{n0, …, n0 + n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDist {
    pub params: ModelParams,
    pub n: u64,
    pmf: Vec<DoubleDouble>,
}

impl ExactDist {
    pub fn support(&self) -> core::ops::RangeInclusive<u64> {
        self.params.n0()..=self.params.n0() + self.n
    }

    /// `P(N_n = k)`, zero outside the support.
    pub fn prob(&self, k: u64) -> f64 {
        k.checked_sub(self.params.n0()).and_then(|i| self.pmf.get(i as usize)).map_or(0.0, |p| p.to_f64())
    }

    pub fn prob_dd(&self, k: u64) -> DoubleDouble {
        k.checked_sub(self.params.n0()).and_then(|i| self.pmf.get(i as usize)).copied().unwrap_or(DoubleDouble::ZERO)
    }

    /// `(k, P(N_n = k))` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let n0 = self.params.n0();
        self.pmf.iter().enumerate().map(move |(i, p)| (n0 + i as u64, p.to_f64()))
    }

    pub fn total_mass(&self) -> DoubleDouble {
        self.pmf.iter().fold(DoubleDouble::ZERO, |acc, &p| acc + p)
    }

    /// `E f(N_n)` with double-double accumulation.
    pub fn expectation(&self, mut f: impl FnMut(u64) -> f64) -> f64 {
        let n0 = self.params.n0();
        self.pmf
            .iter()
            .enumerate()
            .fold(DoubleDouble::ZERO, |acc, (i, p)| {
                let fx = f(n0 + i as u64);
                acc + p.mul_f64(fx)
            })
            .to_f64()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|k| k as f64)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.expectation(|k| {
            let d = k as f64 - mu;
            d * d
        })
    }

    /// Moments of order `1..=order`; `central[0]` is zero.
    pub fn moments(&self, order: usize) -> Result<ExactMoments> {
        if !(1..=4).contains(&order) {
            return Err(Error::DomainError("moment order must be between 1 and 4"));
        }
        let mu = self.mean();
        let raw = (1..=order).map(|j| self.expectation(|k| libm::pow(k as f64, j as f64))).collect();
        let central = (1..=order).map(|j| self.expectation(|k| libm::pow(k as f64 - mu, j as f64))).collect();
        Ok(ExactMoments { raw, central })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    /// `E N^j`, `j = 1..=order`.
    pub raw: Vec<f64>,
    /// `E (N - E N)^j`, `j = 1..=order`.
    pub central: Vec<f64>,
}

fn check_cap(n: u64, cap: u64) -> Result<()> {
    if n > cap {
        return Err(Error::ResourceLimit { requested: n, cap });
    }
    Ok(())
}

/// Advances `pmf` (indexed by `k - n0`, currently length `j + 1`) from step `j` to `j + 1`.
fn advance(pmf: &mut Vec<DoubleDouble>, params: &ModelParams, j: u64) {
    let a = params.a();
    let lambda2 = params.lambda2();
    let n0 = params.n0() as f64;
    let t = (params.initial_total() + j) as f64;
    pmf.push(DoubleDouble::ZERO);
    // walk downward so pmf[i - 1] is still the step-j value when read
    for i in (1..pmf.len()).rev() {
        let below = pmf[i - 1];
        let q_below = (a + lambda2 * (n0 + (i - 1) as f64) / t).clamp(0.0, 1.0);
        let moved_up = below.mul_f64(q_below);
        let here = pmf[i];
        let q_here = (a + lambda2 * (n0 + i as f64) / t).clamp(0.0, 1.0);
        let stay = here - here.mul_f64(q_here);
        pmf[i] = stay + moved_up;
    }
    let q0 = (a + lambda2 * n0 / t).clamp(0.0, 1.0);
    pmf[0] = pmf[0] - pmf[0].mul_f64(q0);
}

/// Exact pmf of `N_n`, with `n` capped at [`DEFAULT_EXACT_CAP`].
pub fn exact_distribution(params: &ModelParams, n: u64) -> Result<ExactDist> {
    exact_distribution_capped(params, n, DEFAULT_EXACT_CAP)
}

pub fn exact_distribution_capped(params: &ModelParams, n: u64, cap: u64) -> Result<ExactDist> {
    Ok(exact_distributions_capped(params, &[n], cap)?.pop().expect("one snapshot requested"))
}

/// Exact pmfs at several strictly increasing step counts, in one pass.
pub fn exact_distributions(params: &ModelParams, ns: &[u64]) -> Result<Vec<ExactDist>> {
    exact_distributions_capped(params, ns, DEFAULT_EXACT_CAP)
}

pub fn exact_distributions_capped(params: &ModelParams, ns: &[u64], cap: u64) -> Result<Vec<ExactDist>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DomainError("step counts must be non-empty and strictly increasing"));
    }
    check_cap(ns[ns.len() - 1], cap)?;
    let mut pmf = Vec::with_capacity(ns[ns.len() - 1] as usize + 1);
    pmf.push(DoubleDouble::ONE);
    let mut out = Vec::with_capacity(ns.len());
    let mut j = 0;
    for &n in ns {
        while j < n {
            advance(&mut pmf, params, j);
            j += 1;
        }
        out.push(ExactDist { params: *params, n, pmf: pmf.clone() });
    }
    Ok(out)
}

/// Raw and central moments of `N_n` from the exact pmf.
pub fn exact_moments(params: &ModelParams, n: u64, order: usize) -> Result<ExactMoments> {
    if !(1..=4).contains(&order) {
        return Err(Error::DomainError("moment order must be between 1 and 4"));
    }
    exact_distribution(params, n)?.moments(order)
}

/// `(E N_j, Var N_j)` for `j = 0..=n` from the closed recursions
/// `E N' = E N + p̄`, `Var N' = Var N (1 + 2λ2/T) + p̄ (1 - p̄)` with
/// `p̄ = a + λ2 E N / T`. These hold exactly because the averaged success
/// probability is affine in `N` and never leaves `[0, 1]` for valid parameters.
pub fn mean_variance_path(params: &ModelParams, n: u64) -> Vec<(f64, f64)> {
    let a = params.a();
    let lambda2 = params.lambda2();
    let mut mean = params.n0() as f64;
    let mut var = 0.0;
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push((mean, var));
    for j in 0..n {
        let t = (params.initial_total() + j) as f64;
        let p = a + lambda2 * mean / t;
        var = var * (1.0 + 2.0 * lambda2 / t) + p * (1.0 - p);
        mean += p;
        out.push((mean, var));
    }
    out
}

/// `Cov(N_m, N_k)` for `m <= k`, using `Cov(N_m, N_{j+1}) = (1 + λ2/T_j) Cov(N_m, N_j)`.
pub fn exact_covariance(params: &ModelParams, m: u64, k: u64) -> Result<f64> {
    if m > k {
        return Err(Error::DomainError("covariance needs m <= k"));
    }
    let (_, var_m) = mean_variance_path(params, m)[m as usize];
    let lambda2 = params.lambda2();
    let factor = (m..k).fold(1.0, |acc, j| acc * (1.0 + lambda2 / (params.initial_total() + j) as f64));
    Ok(var_m * factor)
}

/// `E[(N_n - n c)^k]` for `k = 1..=4`, exact, by an `O(n)` recursion.
///
/// With `D_j = N_j - j c` and one decision `X ~ Bernoulli(p)`,
/// `p = a + λ2 (D_j + j c) / T_j` affine in `D_j`, the conditional moments
/// `E[(D_j + X - c)^k | D_j]` are polynomials in `D_j` of degree `k`
/// (the `D_j^{k+1}` terms cancel), so the first four moments close.
pub fn centered_moments(params: &ModelParams, n: u64, c: f64) -> [f64; 4] {
    let a = params.a();
    let lambda2 = params.lambda2();
    // m[i] = E D^i, i = 0..=4
    let mut m = [1.0, params.n0() as f64, 0.0, 0.0, 0.0];
    for (i, mi) in m.iter_mut().enumerate().skip(2) {
        *mi = libm::pow(params.n0() as f64, i as f64);
    }
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let up = 1.0 - c;
    let stay = -c;
    for j in 0..n {
        let t = (params.initial_total() + j) as f64;
        let p0 = a + lambda2 * (j as f64 * c) / t;
        let p1 = lambda2 / t;
        let mut next = [1.0, 0.0, 0.0, 0.0, 0.0];
        for k in 1..=4usize {
            let mut acc = m[k];
            for i in 0..k {
                // E[p D^i] and E[(1 - p) D^i]
                let pd = p0 * m[i] + p1 * m[i + 1];
                let qd = m[i] - pd;
                let e = (k - i) as f64;
                acc += BINOM[k][i] * (pd * libm::pow(up, e) + qd * libm::pow(stay, e));
            }
            next[k] = acc;
        }
        m = next;
    }
    [m[1], m[2], m[3], m[4]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1() -> ModelParams {
        ModelParams::new(0.3, 0.2, 0.6, 0.1, 1, 1).unwrap()
    }

    fn p3() -> ModelParams {
        ModelParams::new(0.2, 0.6, 1.0, 0.0, 1, 0).unwrap()
    }

    #[test]
    fn one_step() {
        let d = exact_distribution(&p1(), 1).unwrap();
        assert!((d.prob(1) - 0.65).abs() < 1e-15);
        assert!((d.prob(2) - 0.35).abs() < 1e-15);
        assert_eq!(d.prob(0), 0.0);
        assert_eq!(d.prob(3), 0.0);
        let m = exact_moments(&p1(), 1, 2).unwrap();
        assert!((m.raw[0] - 1.35).abs() < 1e-15);
        assert!((m.central[1] - 0.35 * 0.65).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_is_point_mass() {
        let params = ModelParams::new(0.4, 0.1, 0.3, 0.3, 5, 2).unwrap();
        let d = exact_distribution(&params, 0).unwrap();
        assert_eq!(d.iter().collect::<Vec<_>>(), [(5, 1.0)]);
    }

    #[test]
    fn binomial_case() {
        let params = ModelParams::new(0.5, 0.0, 0.4, 0.3, 3, 1).unwrap();
        let d = exact_distribution(&params, 10).unwrap();
        let mut c = 1.0;
        for k in 0..=10u64 {
            if k > 0 {
                c = c * (10 - k + 1) as f64 / k as f64;
            }
            assert!((d.prob(3 + k) - c / 1024.0).abs() < 1e-12);
        }
        let skewed = ModelParams::new(0.3, 0.0, 0.4, 0.3, 1, 1).unwrap();
        let m = exact_moments(&skewed, 200, 2).unwrap();
        assert!((m.central[1] - 200.0 * 0.21).abs() < 1e-9);
    }

    #[test]
    fn mass_balance_at_cap() {
        let d = exact_distribution(&p3(), DEFAULT_EXACT_CAP).unwrap();
        let mass = d.total_mass();
        assert!((mass.hi - 1.0 + mass.lo).abs() < 1e-12);
        assert!(d.iter().all(|(_, p)| p >= 0.0));
        assert_eq!(
            exact_distribution(&p3(), DEFAULT_EXACT_CAP + 1).unwrap_err(),
            Error::ResourceLimit { requested: DEFAULT_EXACT_CAP + 1, cap: DEFAULT_EXACT_CAP }
        );
    }

    #[test]
    fn variance_recursion_matches_dp() {
        for params in [p1(), p3(), ModelParams::new(0.5, 0.3, 0.2, 0.6, 2, 3).unwrap()] {
            let path = mean_variance_path(&params, 600);
            let ds = exact_distributions(&params, &[1, 10, 100, 600]).unwrap();
            for d in &ds {
                let (mean, var) = path[d.n as usize];
                assert!((d.mean() - mean).abs() < 1e-10);
                assert!((d.variance() - var).abs() < 1e-9 * var.max(1.0));
            }
        }
    }

    #[test]
    fn covariance_recursion_matches_dp_on_two_steps() {
        // Cov(N_1, N_2) by brute force over the two-step joint law
        let params = p1();
        let lambda2 = params.lambda2();
        let q = |k: f64, t: f64| params.a() + lambda2 * k / t;
        let mut e_xy = 0.0;
        let mut e_x = 0.0;
        let mut e_y = 0.0;
        for (k1, p1_) in [(1.0, 1.0 - q(1.0, 2.0)), (2.0, q(1.0, 2.0))] {
            for (k2, p2_) in [(k1, 1.0 - q(k1, 3.0)), (k1 + 1.0, q(k1, 3.0))] {
                e_xy += p1_ * p2_ * k1 * k2;
                e_x += p1_ * p2_ * k1;
                e_y += p1_ * p2_ * k2;
            }
        }
        let cov = e_xy - e_x * e_y;
        assert!((exact_covariance(&params, 1, 2).unwrap() - cov).abs() < 1e-15);
        assert!(exact_covariance(&params, 3, 2).is_err());
    }

    #[test]
    fn scaling_slopes_from_dp() {
        let slope = |params: ModelParams| {
            let ds = exact_distributions(&params, &[2048, 4096]).unwrap();
            libm::log2(ds[1].variance() / ds[0].variance())
        };
        assert!((slope(p3()) - 1.2).abs() < 0.1);
        assert!((slope(p1()) - 1.0).abs() < 0.1);
    }

    #[test]
    fn centered_moments_match_dp() {
        for params in [p1(), p3(), ModelParams::new(0.5, 0.3, 0.2, 0.6, 2, 3).unwrap()] {
            for (n, c) in [(0u64, 0.3), (1, 0.3), (37, 0.0), (500, 0.5)] {
                let d = exact_distribution(&params, n).unwrap();
                let got = centered_moments(&params, n, c);
                for k in 1..=4 {
                    let want = d.expectation(|x| libm::pow(x as f64 - n as f64 * c, k as f64));
                    assert!((got[k - 1] - want).abs() <= 1e-9 * want.abs().max(1.0), "{params:?} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(exact_distributions(&p1(), &[]).is_err());
        assert!(exact_distributions(&p1(), &[4, 4]).is_err());
        assert!(exact_moments(&p1(), 3, 0).is_err());
        assert!(exact_moments(&p1(), 3, 5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn mean_matches_recursion(
            a in 0.0..0.5f64, b in 0.0..0.5f64, alpha in 0.0..1.0f64, n0 in 1u64..6, m0 in 0u64..6, n in 0u64..300,
        ) {
            let params = ModelParams::new(a, b, alpha, 0.0, n0, m0).unwrap();
            let d = exact_distribution(&params, n).unwrap();
            let mut mean = n0 as f64;
            for j in 0..n {
                mean += a + params.lambda2() * mean / (n0 + m0 + j) as f64;
            }
            prop_assert!((d.mean() - mean).abs() < 1e-10);
            let mass = d.total_mass().to_f64();
            prop_assert!((mass - 1.0).abs() < 1e-12);
        }

        #[test]
        fn larger_offset_is_stochastically_larger(
            a in 0.0..0.4f64, da in 0.001..0.1f64, b in 0.0..0.5f64, alpha in 0.0..1.0f64, n in 1u64..80,
        ) {
            let lo = ModelParams::new(a, b, alpha, 0.0, 1, 1).unwrap();
            let hi = ModelParams::new(a + da, b, alpha, 0.0, 1, 1).unwrap();
            let (dl, dh) = (exact_distribution(&lo, n).unwrap(), exact_distribution(&hi, n).unwrap());
            let (mut cl, mut ch) = (0.0, 0.0);
            for k in dl.support() {
                cl += dl.prob(k);
                ch += dh.prob(k);
                prop_assert!(ch <= cl + 1e-12, "k = {}", k);
            }
        }
    }
}
