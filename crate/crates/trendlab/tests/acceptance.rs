//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Targets and tolerances are pinned below. Criteria 4 to 10 run the same
//! suites as `trendlab verify` with their default configuration and seed.
//!
//! A criterion that misses its target prints FAIL. The target exits non-zero
//! only for an unexplained failure: a miss where the Monte Carlo estimate also
//! disagrees with the exact finite-`n` value of the same quantity, a runtime
//! over budget, or a determinism break. A miss that the exact finite-`n` law
//! reproduces is finite-`n` bias of the limit theorem and is reported as such.

use std::process::Command as Process;
use std::time::{Duration, Instant};

use trendlab::cli::{build_config, Args};
use trendlab::config::{Command, Suite, DEFAULT_SEED};
use trendlab::engine::Engine;
use trendlab::verify::{critical_grid, random_diffusive_sets, run_suite, VerifyReport, RANDOM_SETS};
use trendlab_core::rng::SeedSpec;
use trendlab_core::theory::{
    bhw_embedding, sigma1_closed, sigma1_integral, sigma1_scalar, sigma2_closed, sigma2_projector_route,
};

const HEYDE_TOL: f64 = 1e-12;
const QUADRATURE_TOL: f64 = 1e-8;
const SIGMA2_TOL: f64 = 1e-12;
const TV_TOL: f64 = 0.01;
const LLN_TOL: f64 = 0.005;
const LLN_P1: f64 = 1.0 / 3.0;
const LLN_NEGATIVE: f64 = 0.446429;
const CLT_VARIANCE: f64 = 0.277778;
const CLT_REL: f64 = 0.05;
const CLT_REPS: f64 = 20_000.0;
const CRITICAL_VARIANCE: f64 = 0.25;
const CRITICAL_REL: f64 = 0.10;
const SLOPE_SUPER: f64 = 1.2;
const SLOPE_DIFFUSIVE: f64 = 1.0;
const SLOPE_TOL: f64 = 0.1;
const W_M1: f64 = 0.559594;
const W_M1_ABS: f64 = 0.02;
const W_M2: f64 = 1.270645;
const W_M2_REL: f64 = 0.05;
const W_M3: f64 = 2.767983;
const W_M3_REL: f64 = 0.10;
const FUNCTIONAL_DIFFUSIVE: f64 = 0.148857;
const FUNCTIONAL_CRITICAL: f64 = 0.125;
const FUNCTIONAL_REL: f64 = 0.10;

#[derive(Clone, Copy)]
enum Tol {
    Abs(f64),
    Rel(f64),
    Below(f64),
}

struct Sub {
    label: &'static str,
    observed: f64,
    target: f64,
    tol: Tol,
    /// Whether the Monte Carlo value matches the exact finite-`n` value.
    finite_n: Option<bool>,
}

impl Sub {
    fn new(label: &'static str, observed: f64, target: f64, tol: Tol) -> Self {
        Sub { label, observed, target, tol, finite_n: None }
    }

    fn with_reference(mut self, report: &VerifyReport, name: &str) -> Self {
        self.finite_n = report.check(name).map(|c| c.pass);
        self
    }

    fn pass(&self) -> bool {
        let d = (self.observed - self.target).abs();
        match self.tol {
            Tol::Abs(t) => d <= t,
            Tol::Rel(t) => d <= t * self.target.abs(),
            Tol::Below(t) => self.observed.abs() < t,
        }
    }

    fn explained(&self) -> bool {
        self.pass() || self.finite_n == Some(true)
    }

    fn describe(&self) -> String {
        let tol = match self.tol {
            Tol::Abs(t) => format!("within {t:e}"),
            Tol::Rel(t) => format!("within {}%", t * 100.0),
            Tol::Below(t) => format!("below {t:e}"),
        };
        let status = match (self.pass(), self.finite_n) {
            (true, _) => "ok".to_string(),
            (false, Some(true)) => "missed, matches exact finite-n value".to_string(),
            (false, Some(false)) => "missed, disagrees with exact finite-n value".to_string(),
            (false, None) => "missed".to_string(),
        };
        format!("{} {} vs {} {tol} ({status})", self.label, show(self.observed), self.target)
    }
}

fn show(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

struct Criterion {
    id: u32,
    title: &'static str,
    subs: Vec<Sub>,
    elapsed: Duration,
    budget: Duration,
}

impl Criterion {
    fn pass(&self) -> bool {
        self.subs.iter().all(Sub::pass) && self.elapsed < self.budget
    }

    fn explained(&self) -> bool {
        self.subs.iter().all(Sub::explained) && self.elapsed < self.budget
    }

    fn line(&self) -> String {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let subs: Vec<String> = self.subs.iter().map(Sub::describe).collect();
        format!(
            "criterion {:>2} {verdict} {}: {} [{:.1}s of {}s]",
            self.id,
            self.title,
            subs.join("; "),
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn suite(suite: Suite, engine: &Engine) -> (VerifyReport, Duration) {
    let config = build_config(Command::Verify, Some(suite), &Args::default()).expect("default config");
    assert_eq!(config.seed, DEFAULT_SEED);
    timed(|| run_suite(&config, engine).expect("suite runs"))
}

fn observed(report: &VerifyReport, name: &str) -> f64 {
    report.check(name).unwrap_or_else(|| panic!("{} report has no check {name}", report.suite)).observed
}

fn heyde() -> Criterion {
    let (worst, elapsed) = timed(|| {
        let mut worst = 0.0f64;
        for i in 0..20 {
            let theta = 0.55 + 0.45 * (i + 1) as f64 / 20.0;
            for j in 0..20 {
                let p = j as f64 / 19.0;
                let (params, v) = bhw_embedding(theta, p).unwrap();
                worst = worst.max((sigma1_scalar(&params).unwrap() - v.unwrap()).abs());
            }
        }
        worst
    });
    Criterion {
        id: 1,
        title: "Heyde reduction",
        subs: vec![Sub::new("max |Σ1 - p(1-p)/(2θ-1)|", worst, 0.0, Tol::Abs(HEYDE_TOL))],
        elapsed,
        budget: Duration::from_secs(1),
    }
}

fn quadrature() -> Criterion {
    let ((worst, count), elapsed) = timed(|| {
        let sets = random_diffusive_sets(SeedSpec::new(DEFAULT_SEED), RANDOM_SETS);
        let worst = sets
            .iter()
            .map(|p| match sigma1_integral(p, 1e-10) {
                Ok(m) => m.max_abs_diff(&sigma1_closed(p).unwrap()),
                Err(_) => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        (worst, sets.len())
    });
    assert!(count >= 100);
    Criterion {
        id: 2,
        title: "integral vs closed-form Σ1 on 100 random sets",
        subs: vec![Sub::new("max entrywise difference", worst, 0.0, Tol::Abs(QUADRATURE_TOL))],
        elapsed,
        budget: Duration::from_secs(10),
    }
}

fn critical_route() -> Criterion {
    let (worst, elapsed) = timed(|| {
        critical_grid(51)
            .iter()
            .map(|p| sigma2_projector_route(p).unwrap().max_abs_diff(&sigma2_closed(p).unwrap()))
            .fold(0.0, f64::max)
    });
    Criterion {
        id: 3,
        title: "critical projector route vs 2a(1-2a) contrast",
        subs: vec![Sub::new("max entrywise difference", worst, 0.0, Tol::Abs(SIGMA2_TOL))],
        elapsed,
        budget: Duration::from_secs(1),
    }
}

fn oracle(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Oracle, engine);
    Criterion {
        id: 4,
        title: "oracle equivalence (P1, n=50, R=1e6; b=0 control)",
        subs: vec![
            Sub::new("TV(MC, exact)", observed(&r, "tv_distance"), 0.0, Tol::Below(TV_TOL)),
            Sub::new("max |exact - binomial|", observed(&r, "control.binomial.dp_max_abs_diff"), 0.0, Tol::Abs(1e-12)),
            Sub::new("TV(MC, binomial)", observed(&r, "control.binomial.tv_distance"), 0.0, Tol::Below(TV_TOL)),
        ],
        elapsed,
        budget: Duration::from_secs(60),
    }
}

fn lln(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Lln, engine);
    Criterion {
        id: 5,
        title: "law of large numbers (n=1e5, R=200)",
        subs: vec![
            Sub::new("P1 proportion", observed(&r, "proportion"), LLN_P1, Tol::Abs(LLN_TOL)),
            Sub::new(
                "negative-λ2 proportion",
                observed(&r, "control.negative_lambda2.proportion"),
                LLN_NEGATIVE,
                Tol::Abs(LLN_TOL),
            ),
        ],
        elapsed,
        budget: Duration::from_secs(60),
    }
}

fn clt(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Clt, engine);
    Criterion {
        id: 6,
        title: "diffusive CLT (P1, n=1e4, R=2e4)",
        subs: vec![
            Sub::new("scaled variance", observed(&r, "scaled_variance"), CLT_VARIANCE, Tol::Rel(CLT_REL))
                .with_reference(&r, "finite_n.scaled_variance"),
            Sub::new("skewness", observed(&r, "skewness"), 0.0, Tol::Below(3.0 * (6.0 / CLT_REPS).sqrt())),
            Sub::new(
                "excess kurtosis",
                observed(&r, "excess_kurtosis"),
                0.0,
                Tol::Below(3.0 * (24.0 / CLT_REPS).sqrt()),
            ),
        ],
        elapsed,
        budget: Duration::from_secs(120),
    }
}

fn critical(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Critical, engine);
    Criterion {
        id: 7,
        title: "critical CLT (P2, n=1e5, R=1e4)",
        subs: vec![Sub::new(
            "variance/(n ln n)",
            observed(&r, "scaled_variance"),
            CRITICAL_VARIANCE,
            Tol::Rel(CRITICAL_REL),
        )
        .with_reference(&r, "finite_n.scaled_variance")],
        elapsed,
        budget: Duration::from_secs(300),
    }
}

fn scaling(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Scaling, engine);
    Criterion {
        id: 8,
        title: "power-law scaling from exact variances (n=2^9..2^12)",
        subs: vec![
            Sub::new("P3 local slope", observed(&r, "local_slope"), SLOPE_SUPER, Tol::Abs(SLOPE_TOL)),
            Sub::new(
                "P1 local slope",
                observed(&r, "control.diffusive.local_slope"),
                SLOPE_DIFFUSIVE,
                Tol::Abs(SLOPE_TOL),
            ),
        ],
        elapsed,
        budget: Duration::from_secs(60),
    }
}

fn elephant(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Elephant, engine);
    Criterion {
        id: 9,
        title: "elephant moments (P3, n=1e4, R=1e5)",
        subs: vec![
            Sub::new("E Z", observed(&r, "m1"), W_M1, Tol::Abs(W_M1_ABS)).with_reference(&r, "finite_n.m1"),
            Sub::new("E Z^2", observed(&r, "m2"), W_M2, Tol::Rel(W_M2_REL)).with_reference(&r, "finite_n.m2"),
            Sub::new("E Z^3", observed(&r, "m3"), W_M3, Tol::Rel(W_M3_REL)).with_reference(&r, "finite_n.m3"),
        ],
        elapsed,
        budget: Duration::from_secs(600),
    }
}

fn functional(engine: &Engine) -> Criterion {
    let (r, elapsed) = suite(Suite::Functional, engine);
    Criterion {
        id: 10,
        title: "functional covariance (n=1e4, R=1e4, s=0.5, t=1)",
        subs: vec![
            Sub::new(
                "P1 cross-covariance",
                observed(&r, "cross_covariance"),
                FUNCTIONAL_DIFFUSIVE,
                Tol::Rel(FUNCTIONAL_REL),
            )
            .with_reference(&r, "finite_n.cross_covariance"),
            Sub::new(
                "P2 cross-covariance, n^t grid",
                observed(&r, "control.critical.cross_covariance"),
                FUNCTIONAL_CRITICAL,
                Tol::Rel(FUNCTIONAL_REL),
            )
            .with_reference(&r, "control.critical.finite_n.cross_covariance"),
        ],
        elapsed,
        budget: Duration::from_secs(300),
    }
}

fn run_binary(args: &[&str], threads: &str, mem_cap: Option<&str>) -> Vec<u8> {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_trendlab"));
    cmd.args(args).args(["--threads", threads]);
    match mem_cap {
        Some(cap) => cmd.env("TRENDLAB_MEM_CAP", cap),
        None => cmd.env_remove("TRENDLAB_MEM_CAP"),
    };
    let out = cmd.output().expect("binary runs");
    assert!(out.status.code().is_some_and(|c| c <= 1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Criterion {
    let runs: [(&[&str], Option<&str>); 5] = [
        (
            &["simulate", "--steps", "2000", "--reps", "700", "--snapshots", "0.25,0.5,1", "--grid-mode", "fractions"],
            None,
        ),
        (&["simulate", "--steps", "500", "--reps", "3000", "--snapshots", "100,500", "--format", "json"], Some("1000")),
        (&["verify", "oracle", "--reps", "50000"], None),
        (&["verify", "functional", "--steps", "2000", "--reps", "3000"], None),
        (&["verify", "clt", "--steps", "2000", "--reps", "3000"], None),
    ];
    let (identical, elapsed) = timed(|| {
        runs.iter()
            .filter(|(args, cap)| {
                let base = run_binary(args, "1", *cap);
                !base.is_empty() && ["2", "4", "1"].iter().all(|t| run_binary(args, t, *cap) == base)
            })
            .count()
    });
    Criterion {
        id: 11,
        title: "byte-identical reruns across --threads 1, 2, 4",
        subs: vec![Sub::new("identical runs", identical as f64, runs.len() as f64, Tol::Abs(0.0))],
        elapsed,
        budget: Duration::from_secs(120),
    }
}

fn main() {
    let engine = Engine::new(None).expect("thread pool");
    let criteria: Vec<fn(&Engine) -> Criterion> = vec![
        |_| heyde(),
        |_| quadrature(),
        |_| critical_route(),
        oracle,
        lln,
        clt,
        critical,
        scaling,
        elephant,
        functional,
        |_| determinism(),
    ];
    let mut results = Vec::new();
    for run in criteria {
        let c = run(&engine);
        println!("{}", c.line());
        results.push(c);
    }
    let passed = results.iter().filter(|c| c.pass()).count();
    let unexplained: Vec<u32> = results.iter().filter(|c| !c.explained()).map(|c| c.id).collect();
    println!(
        "acceptance: {passed} of {} criteria pass; {} fail on finite-n bias reproduced by the exact law",
        results.len(),
        results.len() - passed - unexplained.len()
    );
    if !unexplained.is_empty() {
        println!("acceptance: unexplained failures in criteria {unexplained:?}");
        std::process::exit(1);
    }
}
