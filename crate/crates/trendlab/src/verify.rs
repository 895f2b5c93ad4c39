//! Acceptance suites behind `trendlab verify <suite>`.
//!
//! Each suite runs one experiment and compares observed against expected
//! values. A check is either required (it decides the verdict) or
//! informational (finite-`n` references and consistency cross-checks).
//! Controls run only when the suite's default parameter set is in use.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use trendlab_core::exact::{
    centered_moments, exact_covariance, exact_distribution, exact_distributions, mean_variance_path,
};
use trendlab_core::model::limiting_proportions;
use trendlab_core::rng::{uniform01, SeedSpec};
use trendlab_core::sim::Ensemble;
use trendlab_core::stats::{
    empirical_covariance, estimate_scaling_exponent, normality_diagnostics, scale_ensemble, superdiffusive_moments,
    MomentDiagnostics, TimeChange,
};
use trendlab_core::theory::{
    bhw_embedding, elephant_w_moments, functional_covariance, sigma1_closed, sigma1_integral, sigma1_scalar,
    sigma2_closed, sigma2_critical, sigma2_projector_route,
};
use trendlab_core::{Error, ModelParams, Regime};

use crate::config::{ExperimentConfig, GridMode, ParamsConfig, Suite};
use crate::engine::Engine;
use crate::error::{config_error, Result};
use crate::report::is_elephant;

/// Informational finite-`n` checks accept this many standard errors.
pub const FINITE_N_SIGMAS: f64 = 4.0;

/// Smallest snapshot time accepted by the functional suite.
pub const MIN_FUNCTIONAL_TIME: f64 = 0.1;

/// Control set for the exact binomial comparison.
pub const BINOMIAL_CONTROL: ParamsConfig = ParamsConfig::new(0.5, 0.0, 1.0, 0.0, 1, 1);

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteDefaults {
    pub params: ParamsConfig,
    pub steps: u64,
    pub reps: u64,
    pub snapshots: Vec<f64>,
    pub grid_mode: GridMode,
    /// Headline tolerance; `--tol` replaces it.
    pub tol: f64,
}

pub fn suite_defaults(suite: Suite) -> SuiteDefaults {
    let d = |params, steps, reps, snapshots: &[f64], grid_mode, tol| SuiteDefaults {
        params,
        steps,
        reps,
        snapshots: snapshots.to_vec(),
        grid_mode,
        tol,
    };
    match suite {
        Suite::Lln => d(ParamsConfig::P1, 100_000, 200, &[], GridMode::Steps, 0.005),
        Suite::Clt => d(ParamsConfig::P1, 10_000, 20_000, &[], GridMode::Steps, 0.05),
        Suite::Critical => d(ParamsConfig::P2, 100_000, 10_000, &[], GridMode::Steps, 0.10),
        Suite::Scaling => d(ParamsConfig::P3, 4096, 1, &[512.0, 1024.0, 2048.0, 4096.0], GridMode::Steps, 0.1),
        Suite::Elephant => d(ParamsConfig::P3, 10_000, 100_000, &[], GridMode::Steps, 0.02),
        Suite::Functional => d(ParamsConfig::P1, 10_000, 10_000, &[0.5, 1.0], GridMode::Fractions, 0.10),
        Suite::Oracle => d(ParamsConfig::P1, 50, 1_000_000, &[], GridMode::Steps, 0.01),
        Suite::Analytic => d(ParamsConfig::P1, 0, 1, &[], GridMode::Steps, 1e-8),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceKind {
    /// `|observed - expected| <= tolerance`.
    Absolute,
    /// `|observed - expected| <= tolerance |expected|`.
    Relative,
    /// `|observed| < tolerance`; `expected` is 0.
    StrictAbsolute,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub kind: ToleranceKind,
    pub required: bool,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64, kind: ToleranceKind) -> Self {
        let pass = match kind {
            ToleranceKind::Absolute => (observed - expected).abs() <= tolerance,
            ToleranceKind::Relative => (observed - expected).abs() <= tolerance * expected.abs(),
            ToleranceKind::StrictAbsolute => observed.abs() < tolerance,
        };
        Check { name: name.into(), expected, observed, tolerance, kind, required: true, pass }
    }

    pub fn informational(mut self) -> Self {
        self.required = false;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: &'static str,
    pub expected: BTreeMap<String, f64>,
    pub observed: BTreeMap<String, f64>,
    pub tolerance: BTreeMap<String, Value>,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub details: BTreeMap<String, Value>,
}

impl VerifyReport {
    fn new(suite: Suite, checks: Vec<Check>, details: BTreeMap<String, Value>) -> Self {
        let mut expected = BTreeMap::new();
        let mut observed = BTreeMap::new();
        let mut tolerance = BTreeMap::new();
        for c in &checks {
            expected.insert(c.name.clone(), c.expected);
            observed.insert(c.name.clone(), c.observed);
            tolerance.insert(c.name.clone(), json!({ "kind": c.kind, "value": c.tolerance }));
        }
        let pass = checks.iter().filter(|c| c.required).all(|c| c.pass);
        VerifyReport { suite: suite.name(), expected, observed, tolerance, pass, checks, details }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One human-readable line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let verdict = match (c.pass, c.required) {
                    (true, _) => "PASS",
                    (false, true) => "FAIL",
                    (false, false) => "MISS",
                };
                let role = if c.required { "" } else { " [info]" };
                let kind = match c.kind {
                    ToleranceKind::Absolute => "abs",
                    ToleranceKind::Relative => "rel",
                    ToleranceKind::StrictAbsolute => "|x|<",
                };
                format!(
                    "{verdict} {}{role}: observed {:.6} expected {:.6} tol {kind} {:e}",
                    c.name, c.observed, c.expected, c.tolerance
                )
            })
            .collect()
    }
}

/// The configured tolerance, or the suite default when none is set.
pub fn headline_tol(config: &ExperimentConfig, suite: Suite) -> f64 {
    config.tol.unwrap_or_else(|| suite_defaults(suite).tol)
}

pub fn run_suite(config: &ExperimentConfig, engine: &Engine) -> Result<VerifyReport> {
    let suite = config.suite.ok_or_else(|| config_error("verify needs a suite"))?;
    let ctx = Ctx { config, engine, tol: headline_tol(config, suite), seed: SeedSpec::new(config.seed) };
    let defaults = config.params == suite_defaults(suite).params;
    let mut details = BTreeMap::new();
    let checks = match suite {
        Suite::Lln => lln(&ctx, defaults)?,
        Suite::Clt => clt(&ctx, &mut details)?,
        Suite::Critical => critical(&ctx, &mut details)?,
        Suite::Scaling => scaling(&ctx, defaults, &mut details)?,
        Suite::Elephant => elephant(&ctx, &mut details)?,
        Suite::Functional => functional(&ctx, defaults, &mut details)?,
        Suite::Oracle => oracle(&ctx, defaults, &mut details)?,
        Suite::Analytic => analytic(&ctx, &mut details)?,
    };
    Ok(VerifyReport::new(suite, checks, details))
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    engine: &'a Engine,
    tol: f64,
    seed: SeedSpec,
}

impl Ctx<'_> {
    fn ensemble(&self, params: &ModelParams, grid: &[u64]) -> Result<Ensemble> {
        let c = self.config;
        self.engine.monte_carlo(params, c.steps, grid, c.reps, self.seed, c.memory_cap)
    }
}

fn require(params: &ModelParams, regime: Regime) -> Result<()> {
    let found = params.regime();
    if found != regime {
        return Err(Error::RegimeMismatch { expected: regime.name(), found }.into());
    }
    Ok(())
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sum::<f64>() / n
}

fn diagnostics_json(d: &MomentDiagnostics) -> Value {
    json!({
        "count": d.count,
        "mean": d.mean,
        "variance": d.variance,
        "skewness": d.skewness,
        "excess_kurtosis": d.excess_kurtosis,
        "se_mean": d.se_mean,
        "se_variance": d.se_variance,
        "se_skewness": d.se_skewness,
        "se_kurtosis": d.se_kurtosis,
        "degenerate": d.degenerate,
        "non_normal": d.non_normal,
    })
}

fn lln(ctx: &Ctx, defaults: bool) -> Result<Vec<Check>> {
    let steps = ctx.config.steps;
    let run = |params: &ModelParams, name: &str| -> Result<Check> {
        let (pa, _) = limiting_proportions(params)?;
        let ens = ctx.ensemble(params, &[steps])?;
        let total = (params.initial_total() + steps) as f64;
        let observed = mean(ens.column(0).iter().map(|&x| x as f64 / total));
        Ok(Check::new(name, pa, observed, ctx.tol, ToleranceKind::Absolute))
    };
    let mut checks = vec![run(&ctx.config.model()?, "proportion")?];
    if defaults {
        checks.push(run(&ParamsConfig::NEGATIVE.build()?, "control.negative_lambda2.proportion")?);
    }
    Ok(checks)
}

/// Second moment of a scaled sample with the standard error of its mean.
fn second_moment_with_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let m2 = values.iter().map(|x| x * x).sum::<f64>() / r;
    let m4 = values.iter().map(|x| (x * x) * (x * x)).sum::<f64>() / r;
    (m2, ((m4 - m2 * m2) / r).max(0.0).sqrt())
}

fn clt(ctx: &Ctx, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let params = ctx.config.model()?;
    require(&params, Regime::Diffusive)?;
    let n = ctx.config.steps;
    let ens = ctx.ensemble(&params, &[n])?;
    let sample = scale_ensemble(&ens)?.remove(0);
    let r = sample.values.len() as f64;
    let diag = normality_diagnostics(&sample);
    let (m2, se) = second_moment_with_se(&sample.values);

    let (pa, _) = limiting_proportions(&params)?;
    let finite = centered_moments(&params, n, pa)[1] / n as f64;
    details.insert("diagnostics".into(), diagnostics_json(&diag));
    Ok(vec![
        Check::new(
            "scaled_variance",
            sigma1_scalar(&params)?,
            sample.scaled_variance(),
            ctx.tol,
            ToleranceKind::Relative,
        ),
        Check::new("skewness", 0.0, diag.skewness, 3.0 * (6.0 / r).sqrt(), ToleranceKind::StrictAbsolute),
        Check::new(
            "excess_kurtosis",
            0.0,
            diag.excess_kurtosis,
            3.0 * (24.0 / r).sqrt(),
            ToleranceKind::StrictAbsolute,
        ),
        Check::new("finite_n.scaled_variance", finite, m2, FINITE_N_SIGMAS * se, ToleranceKind::Absolute)
            .informational(),
    ])
}

fn critical(ctx: &Ctx, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let params = ctx.config.model()?;
    require(&params, Regime::Critical)?;
    let n = ctx.config.steps;
    let ens = ctx.ensemble(&params, &[n])?;
    let sample = scale_ensemble(&ens)?.remove(0);
    let (m2, se) = second_moment_with_se(&sample.values);
    let (pa, _) = limiting_proportions(&params)?;
    let nf = n as f64;
    let finite = centered_moments(&params, n, pa)[1] / (nf * nf.ln());
    details.insert("diagnostics".into(), diagnostics_json(&normality_diagnostics(&sample)));
    Ok(vec![
        Check::new(
            "scaled_variance",
            sigma2_critical(&params)?.0[0][0],
            sample.scaled_variance(),
            ctx.tol,
            ToleranceKind::Relative,
        ),
        Check::new("finite_n.scaled_variance", finite, m2, FINITE_N_SIGMAS * se, ToleranceKind::Absolute)
            .informational(),
    ])
}

/// Expected local slope of `log Var N_n` between `n1` and `n2`.
pub fn expected_slope(params: &ModelParams, n1: u64, n2: u64) -> f64 {
    match params.regime() {
        Regime::Diffusive => 1.0,
        Regime::Critical => {
            let (x1, x2) = (n1 as f64, n2 as f64);
            1.0 + (x2.ln() / x1.ln()).ln() / (x2 / x1).ln()
        }
        Regime::Superdiffusive => 2.0 * params.lambda2(),
    }
}

fn scaling(ctx: &Ctx, defaults: bool, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let grid = ctx.config.resolved_grid()?;
    if grid.len() < 4 {
        return Err(config_error("scaling needs at least four snapshots"));
    }
    if grid[0] == 0 {
        return Err(config_error("scaling snapshots must be positive"));
    }
    let run = |params: &ModelParams, prefix: &str, details: &mut BTreeMap<String, Value>| -> Result<Vec<Check>> {
        let dists = exact_distributions(params, &grid)?;
        let path = mean_variance_path(params, *grid.last().unwrap());
        let points: Vec<(f64, f64)> = dists.iter().map(|d| (d.n as f64, d.variance())).collect();
        let drift = dists
            .iter()
            .map(|d| ((d.variance() - path[d.n as usize].1) / path[d.n as usize].1).abs())
            .fold(0.0, f64::max);
        let fit = estimate_scaling_exponent(&points)?;
        let expected = expected_slope(params, grid[grid.len() - 2], grid[grid.len() - 1]);
        details.insert(
            format!("{prefix}fit"),
            json!({ "points": fit.points, "slope": fit.slope, "intercept": fit.intercept, "local_slope": fit.local_slope }),
        );
        Ok(vec![
            Check::new(format!("{prefix}local_slope"), expected, fit.local_slope, ctx.tol, ToleranceKind::Absolute),
            Check::new(format!("{prefix}dp_vs_recursion"), 0.0, drift, 1e-9, ToleranceKind::Absolute),
        ])
    };
    let mut checks = run(&ctx.config.model()?, "", details)?;
    if defaults {
        checks.extend(run(&ParamsConfig::P1.build()?, "control.diffusive.", details)?);
    }
    Ok(checks)
}

/// `E Z_n^k`, `k = 1..=3`, computed exactly by recursion.
pub fn exact_z_moments(params: &ModelParams, n: u64) -> Result<[f64; 3]> {
    let (pa, _) = limiting_proportions(params)?;
    let cm = centered_moments(params, n, pa);
    let scale = (n as f64).powf(params.lambda2());
    Ok([cm[0] / scale, cm[1] / scale.powi(2), cm[2] / scale.powi(3)])
}

fn elephant(ctx: &Ctx, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let params = ctx.config.model()?;
    if !is_elephant(&params) {
        return Err(config_error(
            "the elephant suite needs beta = 0, alpha = (1 - 2a)/b, n0 = 1, m0 = 0 in the superdiffusive regime",
        ));
    }
    let n = ctx.config.steps;
    let w = elephant_w_moments(params.a())?;
    let ens = ctx.ensemble(&params, &[n])?;
    let z = superdiffusive_moments(&ens, 0)?;
    let finite = exact_z_moments(&params, n)?;

    let (pa, _) = limiting_proportions(&params)?;
    let trajectory: Vec<Value> = exact_distributions(&params, &[512, 1024, 2048, 4096])?
        .iter()
        .map(|d| {
            let scale = (d.n as f64).powf(params.lambda2());
            let c = d.n as f64 * pa;
            let m = |k: i32| d.expectation(|x| ((x as f64 - c) / scale).powi(k));
            json!({ "n": d.n, "m1": m(1), "m2": m(2), "m3": m(3) })
        })
        .collect();
    details.insert("dp_trajectory".into(), Value::Array(trajectory));
    details.insert("standard_errors".into(), json!(z.se));
    details.insert("diagnostics".into(), diagnostics_json(&z.diagnostics));

    let mut checks = vec![
        Check::new("m1", w.m1, z.raw[0], ctx.tol, ToleranceKind::Absolute),
        Check::new("m2", w.m2, z.raw[1], 0.05, ToleranceKind::Relative),
        Check::new("m3", w.m3, z.raw[2], 0.10, ToleranceKind::Relative),
    ];
    for (k, (&want, (&got, &se))) in finite.iter().zip(z.raw.iter().zip(&z.se)).take(3).enumerate() {
        checks.push(
            Check::new(format!("finite_n.m{}", k + 1), want, got, FINITE_N_SIGMAS * se, ToleranceKind::Absolute)
                .informational(),
        );
    }
    Ok(checks)
}

fn functional(ctx: &Ctx, defaults: bool, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let c = ctx.config;
    let [s, t] = c.snapshots[..] else {
        return Err(config_error("functional needs exactly two snapshot times s < t"));
    };
    if s < MIN_FUNCTIONAL_TIME {
        return Err(config_error(format!("functional needs s >= {MIN_FUNCTIONAL_TIME}")));
    }
    let run = |params: &ModelParams,
               mode: GridMode,
               prefix: &str,
               details: &mut BTreeMap<String, Value>|
     -> Result<Vec<Check>> {
        let n = c.steps;
        let time = match (params.regime(), mode) {
            (Regime::Diffusive, GridMode::Fractions) => TimeChange::Linear { n },
            (Regime::Critical, GridMode::Powers) => TimeChange::Power { n },
            (Regime::Superdiffusive, _) => {
                return Err(
                    Error::RegimeMismatch { expected: "diffusive or critical", found: Regime::Superdiffusive }.into()
                )
            }
            (Regime::Diffusive, _) => {
                return Err(config_error("the diffusive functional suite uses --grid-mode fractions"))
            }
            (Regime::Critical, _) => return Err(config_error("the critical functional suite uses --grid-mode powers")),
        };
        let grid = crate::config::resolve_grid(&[s, t], mode, n)?;
        let ens = ctx.ensemble(params, &grid)?;
        let observed = empirical_covariance(&ens, 0, 1, time)?.0[0][0];
        let expected = functional_covariance(params, s, t)?.0[0][0];

        let (pa, _) = limiting_proportions(params)?;
        let norm = |m: u64| match time {
            TimeChange::Linear { n } => (n as f64).sqrt(),
            TimeChange::Power { n } => (m as f64 * (n as f64).ln()).sqrt(),
        };
        let (m1, m2) = (grid[0], grid[1]);
        let (k1, k2) = (norm(m1), norm(m2));
        let path = mean_variance_path(params, m2);
        let bias = (path[m1 as usize].0 - m1 as f64 * pa) * (path[m2 as usize].0 - m2 as f64 * pa);
        let finite = (exact_covariance(params, m1, m2)? + bias) / (k1 * k2);
        let products: Vec<f64> = ens
            .column(0)
            .iter()
            .zip(ens.column(1))
            .map(|(&x, &y)| (x as f64 - m1 as f64 * pa) / k1 * ((y as f64 - m2 as f64 * pa) / k2))
            .collect();
        let r = products.len() as f64;
        let pm = products.iter().sum::<f64>() / r;
        let se = (products.iter().map(|p| (p - pm) * (p - pm)).sum::<f64>() / (r - 1.0).max(1.0) / r).sqrt();

        details.insert(format!("{prefix}grid"), json!(grid));
        Ok(vec![
            Check::new(format!("{prefix}cross_covariance"), expected, observed, ctx.tol, ToleranceKind::Relative),
            Check::new(
                format!("{prefix}finite_n.cross_covariance"),
                finite,
                observed,
                FINITE_N_SIGMAS * se,
                ToleranceKind::Absolute,
            )
            .informational(),
        ])
    };
    let mut checks = run(&c.model()?, c.grid_mode, "", details)?;
    if defaults {
        checks.extend(run(&ParamsConfig::P2.build()?, GridMode::Powers, "control.critical.", details)?);
    }
    Ok(checks)
}

/// Law of `n0 + Binomial(n, a)`, indexed by successes.
pub fn binomial_pmf(n: u64, a: f64) -> Vec<f64> {
    let ln = |x: f64, k: u64| if k == 0 { 0.0 } else { k as f64 * x.ln() };
    let mut ln_choose = 0.0;
    (0..=n)
        .map(|k| {
            if k > 0 {
                ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            (ln_choose + ln(a, k) + ln(1.0 - a, n - k)).exp()
        })
        .collect()
}

fn total_variation(ens: &Ensemble, n0: u64, pmf: &[f64]) -> f64 {
    let mut counts = vec![0u64; pmf.len()];
    for &x in ens.column(0) {
        counts[(x - n0) as usize] += 1;
    }
    let r = ens.replicates() as f64;
    0.5 * counts.iter().zip(pmf).map(|(&c, &p)| (c as f64 / r - p).abs()).sum::<f64>()
}

fn oracle(ctx: &Ctx, defaults: bool, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let n = ctx.config.steps;
    let run = |params: &ModelParams, prefix: &str| -> Result<Vec<Check>> {
        let dist = exact_distribution(params, n)?;
        let pmf: Vec<f64> = dist.iter().map(|(_, p)| p).collect();
        let ens = ctx.ensemble(params, &[n])?;
        let mut checks = vec![Check::new(
            format!("{prefix}tv_distance"),
            0.0,
            total_variation(&ens, params.n0(), &pmf),
            ctx.tol,
            ToleranceKind::StrictAbsolute,
        )];
        if params.b() == 0.0 {
            let bin = binomial_pmf(n, params.a());
            let diff = pmf.iter().zip(&bin).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            checks.push(Check::new(
                format!("{prefix}binomial.dp_max_abs_diff"),
                0.0,
                diff,
                1e-12,
                ToleranceKind::Absolute,
            ));
            checks.push(Check::new(
                format!("{prefix}binomial.tv_distance"),
                0.0,
                total_variation(&ens, params.n0(), &bin),
                ctx.tol,
                ToleranceKind::StrictAbsolute,
            ));
        }
        Ok(checks)
    };
    let mut checks = run(&ctx.config.model()?, "")?;
    if defaults {
        checks.extend(run(&BINOMIAL_CONTROL.build()?, "control.")?);
        details.insert("control.params".into(), json!(BINOMIAL_CONTROL));
    }
    Ok(checks)
}

/// Number of random diffusive parameter sets in the quadrature check.
pub const RANDOM_SETS: usize = 100;

/// `a`, `b`, `alpha` and `beta` drawn uniformly inside the constraints, with
/// `beta = 0` half the time; sets outside the diffusive regime are redrawn.
pub fn random_diffusive_sets(seed: SeedSpec, count: usize) -> Vec<ModelParams> {
    let mut rng = seed.stream(0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = uniform01(&mut rng);
        let mut b = uniform01(&mut rng) * (1.0 - a);
        let alpha = uniform01(&mut rng);
        let beta = if uniform01(&mut rng) < 0.5 { 0.0 } else { uniform01(&mut rng) * (1.0 - alpha) };
        if beta != 0.0 {
            b = b.min(a);
        }
        if let Ok(p) = ModelParams::new(a, b, alpha, beta, 1, 1) {
            if p.regime() == Regime::Diffusive {
                out.push(p);
            }
        }
    }
    out
}

/// The two critical families `(a, 1/2, 1, 0)` and `(a, 1 - a, 1/(2(1 - a)), 0)`.
pub fn critical_grid(points: usize) -> Vec<ModelParams> {
    let mut out = Vec::new();
    for i in 0..points {
        let a = 0.5 * i as f64 / (points - 1) as f64;
        out.push(ModelParams::new(a, 0.5, 1.0, 0.0, 1, 1).expect("valid critical set"));
        out.push(ModelParams::new(a, 1.0 - a, 0.5 / (1.0 - a), 0.0, 1, 1).expect("valid critical set"));
    }
    out
}

fn analytic(ctx: &Ctx, details: &mut BTreeMap<String, Value>) -> Result<Vec<Check>> {
    let mut heyde = 0.0f64;
    for i in 0..20 {
        let theta = 0.55 + 0.45 * (i + 1) as f64 / 20.0;
        for j in 0..20 {
            let p = j as f64 / 19.0;
            let (params, v) = bhw_embedding(theta, p)?;
            let v = v.expect("theta > 1/2");
            heyde = heyde.max((sigma1_scalar(&params)? - v).abs());
        }
    }

    let mut quad = 0.0f64;
    let mut failures = Vec::new();
    for params in random_diffusive_sets(ctx.seed, RANDOM_SETS) {
        match sigma1_integral(&params, 1e-10) {
            Ok(m) => quad = quad.max(m.max_abs_diff(&sigma1_closed(&params)?)),
            Err(e @ Error::QuadratureFailure { .. }) => {
                quad = f64::INFINITY;
                failures.push(json!({ "params": ParamsConfig::from(&params), "error": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    details.insert("sigma1_integral.failures".into(), Value::Array(failures));

    let grid = critical_grid(51);
    let mut crit = 0.0f64;
    for params in &grid {
        crit = crit.max(sigma2_projector_route(params)?.max_abs_diff(&sigma2_closed(params)?));
    }
    details.insert("critical_sets".into(), json!(grid.len()));

    Ok(vec![
        Check::new("heyde_reduction.max_abs_diff", 0.0, heyde, 1e-12, ToleranceKind::Absolute),
        Check::new("sigma1_integral_vs_closed.max_abs_diff", 0.0, quad, ctx.tol, ToleranceKind::Absolute),
        Check::new("sigma2_projector_vs_closed.max_abs_diff", 0.0, crit, 1e-12, ToleranceKind::Absolute),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Command, Format};
    use trendlab_core::sim::DEFAULT_MEMORY_CAP;

    fn config(suite: Suite) -> ExperimentConfig {
        let d = suite_defaults(suite);
        ExperimentConfig {
            command: Command::Verify,
            suite: Some(suite),
            params: d.params,
            bhw: None,
            steps: d.steps,
            reps: d.reps,
            seed: 3,
            snapshots: d.snapshots,
            grid_mode: d.grid_mode,
            format: Format::Json,
            tol: Some(d.tol),
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }

    #[test]
    fn check_kinds() {
        assert!(Check::new("x", 1.0, 1.04, 0.05, ToleranceKind::Relative).pass);
        assert!(!Check::new("x", 1.0, 1.06, 0.05, ToleranceKind::Relative).pass);
        assert!(Check::new("x", 0.0, -0.009, 0.01, ToleranceKind::StrictAbsolute).pass);
        assert!(!Check::new("x", 0.0, 0.01, 0.01, ToleranceKind::StrictAbsolute).pass);
        assert!(!Check::new("x", 0.0, f64::NAN, 0.01, ToleranceKind::Absolute).pass);
    }

    #[test]
    fn informational_checks_do_not_decide() {
        let checks = vec![
            Check::new("a", 1.0, 1.0, 0.1, ToleranceKind::Absolute),
            Check::new("b", 1.0, 5.0, 0.1, ToleranceKind::Absolute).informational(),
        ];
        assert!(VerifyReport::new(Suite::Lln, checks, BTreeMap::new()).pass);
    }

    #[test]
    fn binomial_pmf_matches_direct() {
        let pmf = binomial_pmf(10, 0.3);
        let direct = |k: u32| {
            let choose = (0..k).fold(1.0, |acc, i| acc * (10 - i) as f64 / (i + 1) as f64);
            choose * 0.3f64.powi(k as i32) * 0.7f64.powi(10 - k as i32)
        };
        for k in 0..=10 {
            assert!((pmf[k as usize] - direct(k)).abs() < 1e-15);
        }
        assert_eq!(binomial_pmf(3, 0.0), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(2, 1.0), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn slopes() {
        let p1 = ParamsConfig::P1.build().unwrap();
        let p2 = ParamsConfig::P2.build().unwrap();
        let p3 = ParamsConfig::P3.build().unwrap();
        assert_eq!(expected_slope(&p1, 2048, 4096), 1.0);
        assert!((expected_slope(&p3, 2048, 4096) - 1.2).abs() < 1e-12);
        let crit = expected_slope(&p2, 2048, 4096);
        assert!((crit - (1.0 + (12.0f64 / 11.0).log2())).abs() < 1e-12);
    }

    #[test]
    fn generated_sets_are_diffusive_and_reproducible() {
        let a = random_diffusive_sets(SeedSpec::new(1), 30);
        assert_eq!(a, random_diffusive_sets(SeedSpec::new(1), 30));
        assert!(a.iter().all(|p| p.regime() == Regime::Diffusive));
        assert!(a.iter().any(|p| p.beta() == 0.0) && a.iter().any(|p| p.beta() > 0.0));
        assert!(critical_grid(5).iter().all(|p| p.regime() == Regime::Critical));
    }

    #[test]
    fn small_suites_run() {
        let engine = Engine::new(Some(2)).unwrap();
        let report = run_suite(&config(Suite::Analytic), &engine).unwrap();
        assert!(report.pass, "{:?}", report.lines());

        let mut c = config(Suite::Oracle);
        c.reps = 20_000;
        c.tol = Some(0.05);
        let report = run_suite(&c, &engine).unwrap();
        assert_eq!(report.checks.len(), 4);
        assert!(report.pass, "{:?}", report.lines());

        let report = run_suite(&config(Suite::Scaling), &engine).unwrap();
        assert!(report.pass, "{:?}", report.lines());
    }

    #[test]
    fn suite_input_errors() {
        let engine = Engine::new(Some(1)).unwrap();
        let mut c = config(Suite::Elephant);
        c.params = ParamsConfig::P1;
        assert!(run_suite(&c, &engine).is_err());
        let mut c = config(Suite::Functional);
        c.snapshots = vec![0.05, 1.0];
        assert!(run_suite(&c, &engine).is_err());
        let mut c = config(Suite::Clt);
        c.params = ParamsConfig::P2;
        assert!(matches!(run_suite(&c, &engine), Err(crate::error::CliError::Model(Error::RegimeMismatch { .. }))));
    }
}
