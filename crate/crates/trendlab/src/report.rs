//! The `theory` report: every analytic quantity for one parameter set.
//!
//! Quantities that do not exist for the given regime are reported as `null`
//! with a note, never as a failure.

use serde::Serialize;
use trendlab_core::linalg::{Matrix2, Vector2};
use trendlab_core::model::limiting_proportions;
use trendlab_core::theory::{
    b_matrix, bhw_embedding, eigenstructure, elephant_w_moments, mean_replacement_matrix, sigma1_closed,
    sigma1_integral, sigma1_scalar, sigma2_closed, sigma2_critical,
};
use trendlab_core::{Error, ModelParams, Regime};

use crate::config::{BhwConfig, ParamsConfig};

/// Default absolute tolerance for the quadrature route to `Σ1`.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

type Mat = [[f64; 2]; 2];

fn mat(m: Matrix2) -> Mat {
    m.0
}

fn vec2(v: Vector2) -> [f64; 2] {
    v.0
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub v1: [f64; 2],
    pub v2: [f64; 2],
    pub u1: [f64; 2],
    pub u2: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct WMomentsReport {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BinomialReport {
    pub p_a: f64,
    pub sigma1_scalar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BhwReport {
    pub theta: f64,
    pub p: f64,
    pub heyde_variance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub params: ParamsConfig,
    pub lambda2: f64,
    pub regime: &'static str,
    pub limiting_proportions: Option<[f64; 2]>,
    pub mean_replacement_matrix: Mat,
    pub eigen: Option<EigenReport>,
    pub b_matrix: Option<Mat>,
    pub sigma1_scalar: Option<f64>,
    pub sigma1_closed: Option<Mat>,
    pub sigma1_integral: Option<Mat>,
    pub sigma1_route_difference: Option<f64>,
    pub sigma2: Option<Mat>,
    pub sigma2_closed: Option<Mat>,
    pub w_moments: Option<WMomentsReport>,
    pub binomial: Option<BinomialReport>,
    pub bhw: Option<BhwReport>,
    pub notes: Vec<String>,
}

/// `beta = 0`, `alpha = (1 - 2a)/b`, `N0 = 1`, `M0 = 0`, superdiffusive.
pub fn is_elephant(params: &ModelParams) -> bool {
    params.beta() == 0.0
        && params.b() > 0.0
        && params.n0() == 1
        && params.m0() == 0
        && (params.alpha() - (1.0 - 2.0 * params.a()) / params.b()).abs() <= 1e-12
        && params.regime() == Regime::Superdiffusive
}

fn keep<T>(label: &str, value: Result<T, Error>, notes: &mut Vec<String>) -> Option<T> {
    match value {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{label}: {e}"));
            None
        }
    }
}

pub fn theory_report(params: &ModelParams, bhw: Option<BhwConfig>, tol: Option<f64>) -> TheoryReport {
    let mut notes = Vec::new();
    let regime = params.regime();
    let eigen = keep("eigen", eigenstructure(params), &mut notes);
    let b = keep("b_matrix", b_matrix(params), &mut notes);
    let props = keep("limiting_proportions", limiting_proportions(params), &mut notes);

    let (s1_scalar, s1_closed, s1_integral) = if regime == Regime::Diffusive {
        let tol = tol.unwrap_or(DEFAULT_QUADRATURE_TOL);
        (
            keep("sigma1_scalar", sigma1_scalar(params), &mut notes),
            keep("sigma1_closed", sigma1_closed(params), &mut notes),
            keep("sigma1_integral", sigma1_integral(params, tol), &mut notes),
        )
    } else {
        notes.push(format!("sigma1: defined only in the diffusive regime, parameters are {regime}"));
        (None, None, None)
    };
    let route_diff = match (s1_closed, s1_integral) {
        (Some(c), Some(i)) => Some(c.max_abs_diff(&i)),
        _ => None,
    };

    let (s2, s2_closed) = if regime == Regime::Critical {
        (keep("sigma2", sigma2_critical(params), &mut notes), keep("sigma2_closed", sigma2_closed(params), &mut notes))
    } else {
        notes.push(format!("sigma2: defined only in the critical regime, parameters are {regime}"));
        (None, None)
    };

    let w_moments = if is_elephant(params) {
        keep("w_moments", elephant_w_moments(params.a()), &mut notes).map(|w| WMomentsReport {
            m1: w.m1,
            m2: w.m2,
            m3: w.m3,
        })
    } else {
        notes.push("w_moments: parameters are not an elephant parameterization".to_string());
        None
    };

    let binomial =
        (params.b() == 0.0).then(|| BinomialReport { p_a: params.a(), sigma1_scalar: params.a() * (1.0 - params.a()) });

    let bhw = bhw.map(|c| {
        let heyde = match bhw_embedding(c.theta, c.p) {
            Ok((_, v)) => v,
            Err(e) => {
                notes.push(format!("bhw: {e}"));
                None
            }
        };
        if heyde.is_none() {
            notes.push("bhw: the Heyde variance needs theta > 1/2".to_string());
        }
        BhwReport { theta: c.theta, p: c.p, heyde_variance: heyde }
    });

    TheoryReport {
        params: ParamsConfig::from(params),
        lambda2: params.lambda2(),
        regime: regime.name(),
        limiting_proportions: props.map(|(a, b)| [a, b]),
        mean_replacement_matrix: mat(mean_replacement_matrix(params)),
        eigen: eigen.map(|e| EigenReport {
            lambda1: e.lambda1,
            lambda2: e.lambda2,
            v1: vec2(e.v1),
            v2: vec2(e.v2),
            u1: vec2(e.u1),
            u2: vec2(e.u2),
        }),
        b_matrix: b.map(mat),
        sigma1_scalar: s1_scalar,
        sigma1_closed: s1_closed.map(mat),
        sigma1_integral: s1_integral.map(mat),
        sigma1_route_difference: route_diff,
        sigma2: s2.map(mat),
        sigma2_closed: s2_closed.map(mat),
        w_moments,
        binomial,
        bhw,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diffusive_report() {
        let r = theory_report(&ParamsConfig::P1.build().unwrap(), None, None);
        assert_eq!(r.regime, "diffusive");
        let [pa, pb] = r.limiting_proportions.unwrap();
        assert!((pa - 1.0 / 3.0).abs() < 1e-12 && (pb - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.sigma1_scalar.unwrap() - 0.277_777_777_777_777_8).abs() < 1e-12);
        assert!(r.sigma1_route_difference.unwrap() < 1e-8);
        assert!(r.sigma2.is_none() && r.w_moments.is_none() && r.binomial.is_none());
        assert_eq!(r.notes.len(), 2);
    }

    #[test]
    fn binomial_block() {
        let p = ModelParams::new(0.4, 0.0, 0.6, 0.1, 1, 1).unwrap();
        let r = theory_report(&p, None, None);
        let bin = r.binomial.unwrap();
        assert_eq!(bin.p_a, 0.4);
        assert!((bin.sigma1_scalar - 0.24).abs() < 1e-15);
        assert!((r.sigma1_scalar.unwrap() - 0.24).abs() < 1e-12);
    }

    #[test]
    fn critical_and_elephant_blocks() {
        let r = theory_report(&ParamsConfig::P2.build().unwrap(), None, None);
        assert_eq!(r.regime, "critical");
        assert!((r.sigma2.unwrap()[0][0] - 0.25).abs() < 1e-12);
        assert!(r.sigma1_scalar.is_none());

        let r = theory_report(&ParamsConfig::P3.build().unwrap(), None, None);
        assert_eq!(r.regime, "superdiffusive");
        let w = r.w_moments.unwrap();
        assert!((w.m2 - 1.270_645).abs() < 1e-5);
        assert!(r.sigma1_scalar.is_none() && r.sigma2.is_none());
    }

    #[test]
    fn bhw_block() {
        let (params, _) = bhw_embedding(0.75, 0.4).unwrap();
        let r = theory_report(&params, Some(BhwConfig { theta: 0.75, p: 0.4 }), None);
        let h = r.bhw.unwrap().heyde_variance.unwrap();
        assert!((h - 0.48).abs() < 1e-12);
        assert!((r.sigma1_scalar.unwrap() - h).abs() < 1e-12);
    }
}
