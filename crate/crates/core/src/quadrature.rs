//! Gauss–Laguerre quadrature for `∫₀^∞ f(x) e^{-x} dx`, plus Gauss–Legendre
//! panels for finite intervals.
//!
//! Nodes are the eigenvalues of the Laguerre Jacobi matrix (implicit QL,
//! eigenvalues only), polished by Newton steps on `L_n`. Weights come from the
//! Christoffel sum `1 / w_i = Σ_{k<n} L_k(x_i)^2` (a sum of positive terms, so
//! no cancellation) and are kept in log form: for a few thousand nodes the
//! largest weights underflow while the integrands we feed them grow almost as
//! fast as `e^{x}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    nodes: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("quadrature needs at least one node"));
        }
        let mut diag: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64).collect();
        // off[i] couples rows i and i + 1
        let mut off: Vec<f64> = (0..n).map(|i| if i + 1 < n { (i + 1) as f64 } else { 0.0 }).collect();
        tridiagonal_eigenvalues(&mut diag, &mut off)?;
        diag.sort_by(|x, y| x.total_cmp(y));

        let mut nodes = Vec::with_capacity(n);
        let mut ln_weights = Vec::with_capacity(n);
        for &guess in &diag {
            let x = polish_root(n, guess);
            nodes.push(x);
            ln_weights.push(-ln_christoffel_sum(n, x));
        }
        Ok(GaussLaguerre { nodes, ln_weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    /// `Σ w_i f(x_i)` for a scalar integrand.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.ln_weights).map(|(&x, &lw)| libm::exp(lw) * f(x)).sum()
    }
}

/// Returns `(L_n(x), L_{n-1}(x), ln_scale)` where the true values are the
/// returned ones times `exp(ln_scale)`.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 1.0; // L_0
    let mut cur = 1.0 - x; // L_1
    let mut ln_scale = 0.0;
    if n == 1 {
        return (cur, prev, 0.0);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - (k as f64) * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e150 {
            cur /= mag;
            prev /= mag;
            ln_scale += libm::log(mag);
        }
    }
    (cur, prev, ln_scale)
}

/// `ln Σ_{k<n} L_k(x)^2`.
fn ln_christoffel_sum(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0; // L_0
    let mut acc = 0.0;
    let mut ln_scale = 0.0;
    for k in 0..n {
        acc += cur * cur;
        let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - (k as f64) * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e100 {
            cur /= mag;
            prev /= mag;
            acc /= mag * mag;
            ln_scale += libm::log(mag);
        }
    }
    libm::log(acc) + 2.0 * ln_scale
}

fn polish_root(n: usize, mut x: f64) -> f64 {
    for _ in 0..4 {
        let (ln, lnm1, _) = laguerre_pair(n, x);
        // L_n'(x) = n (L_n - L_{n-1}) / x, common scale cancels in the ratio
        let deriv = n as f64 * (ln - lnm1) / x;
        let step = ln / deriv;
        if !step.is_finite() {
            break;
        }
        let next = x - step;
        if next <= 0.0 {
            break;
        }
        x = next;
        if step.abs() <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    x
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// On return `diag` holds the eigenvalues (unsorted); `off` is destroyed.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 100 {
                return Err(Error::DomainError("tridiagonal eigenvalue iteration did not converge"));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = libm::hypot(g, 1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = libm::hypot(f, g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Gauss–Legendre rule on `[-1, 1]`, nodes by Newton iteration on `P_n`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("quadrature needs at least one node"));
        }
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Tricomi initial guess, descending
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut deriv = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                deriv = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                deriv = d;
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * deriv * deriv));
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Doubling schedule used by adaptive callers: 64, 128, …, `cap`.
pub fn doubling_schedule(start: usize, cap: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(start);
    core::iter::from_fn(move || {
        let cur = next?;
        next = if cur * 2 <= cap { Some(cur * 2) } else { None };
        Some(cur)
    })
}
