//! Command-line front end.
//!
//! Exit codes: 0 on success (and on a passing `verify`), 1 when `verify`
//! fails, 2 on any usage, configuration, resource or I/O error. Errors are
//! printed to stderr as a single JSON object `{"error": kind, "message": ...}`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use trendlab_core::exact::exact_distribution;
use trendlab_core::rng::SeedSpec;
use trendlab_core::theory::bhw_embedding;

use crate::config::{
    memory_cap_from_env, BhwConfig, Command, ExperimentConfig, Format, GridMode, ParamsConfig, Suite, DEFAULT_SEED,
};
use crate::engine::Engine;
use crate::error::{config_error, CliError, Result};
use crate::output::{self, embedded_config};
use crate::report::theory_report;
use crate::verify::{run_suite, suite_defaults};

/// Steps simulated when `simulate` is given no `--steps`.
pub const DEFAULT_SIMULATE_STEPS: u64 = 1000;
/// Steps used when `exact` is given no `--steps`.
pub const DEFAULT_EXACT_STEPS: u64 = 50;

#[derive(Debug, Parser)]
#[command(
    name = "trendlab",
    version,
    about = "Random-trend diffusion model: theory, simulation, exact laws and verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Analytic report: regime, limits, spectrum and covariances.
    Theory(Args),
    /// Monte Carlo ensemble (or a streaming summary past the memory cap).
    Simulate(Args),
    /// Exact law of the `A` count after `--steps` decisions.
    Exact(Args),
    /// Run an acceptance suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        args: Args,
    },
}

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n0: Option<u64>,
    #[arg(long)]
    pub m0: Option<u64>,
    /// Number of decisions `n`.
    #[arg(long, visible_alias = "n")]
    pub steps: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated snapshot list, read according to `--grid-mode`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub grid_mode: Option<GridMode>,
    /// Worker threads (default: all cores). Never changes the output.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Use the θ-mixture embedding (`theory` only).
    #[arg(long, requires_all = ["theta", "p"])]
    pub bhw: bool,
    #[arg(long, requires = "bhw")]
    pub theta: Option<f64>,
    #[arg(long, requires = "bhw")]
    pub p: Option<f64>,
    /// Start from a configuration: a JSON config, or any output file of this tool.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn defaults(command: Command, suite: Option<Suite>) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig {
        command,
        suite,
        params: ParamsConfig::P1,
        bhw: None,
        steps: 0,
        reps: 0,
        seed: DEFAULT_SEED,
        snapshots: Vec::new(),
        grid_mode: GridMode::Steps,
        format: Format::Csv,
        tol: None,
        memory_cap: memory_cap_from_env()?,
    };
    match command {
        Command::Theory => c.format = Format::Json,
        Command::Simulate => {
            c.steps = DEFAULT_SIMULATE_STEPS;
            c.reps = 1;
        }
        Command::Exact => c.steps = DEFAULT_EXACT_STEPS,
        Command::Verify => {
            let d = suite_defaults(suite.ok_or_else(|| config_error("verify needs a suite"))?);
            c.params = d.params;
            c.steps = d.steps;
            c.reps = d.reps;
            c.snapshots = d.snapshots;
            c.grid_mode = d.grid_mode;
            c.tol = Some(d.tol);
            c.format = Format::Json;
        }
    }
    Ok(c)
}

/// Reads a configuration from a JSON config, a JSON output document or a CSV
/// output with an embedded `# config:` line.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    if text.starts_with('#') {
        let json = embedded_config(&text).ok_or_else(|| config_error("no embedded config line in CSV"))?;
        return Ok(serde_json::from_str(json)?);
    }
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let inner = match value.get("config") {
        Some(c) if value.get("provenance").is_some() => c.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(inner)?)
}

pub fn build_config(command: Command, suite: Option<Suite>, args: &Args) -> Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(path) => {
            let c = load_config(path)?;
            if c.command != command {
                return Err(config_error(format!("config is for {:?}, not {:?}", c.command, command)));
            }
            if c.suite != suite {
                return Err(config_error("config names a different suite"));
            }
            c
        }
        None => defaults(command, suite)?,
    };
    let p = &mut c.params;
    let explicit_params =
        [args.a, args.b, args.alpha, args.beta].iter().any(Option::is_some) || args.n0.is_some() || args.m0.is_some();
    if let Some(v) = args.a {
        p.a = v;
    }
    if let Some(v) = args.b {
        p.b = v;
    }
    if let Some(v) = args.alpha {
        p.alpha = v;
    }
    if let Some(v) = args.beta {
        p.beta = v;
    }
    if let Some(v) = args.n0 {
        p.n0 = v;
    }
    if let Some(v) = args.m0 {
        p.m0 = v;
    }
    if args.bhw {
        if explicit_params {
            return Err(config_error("--bhw sets the model parameters; do not combine it with --a/--b/..."));
        }
        let (theta, p) = (args.theta.unwrap_or(f64::NAN), args.p.unwrap_or(f64::NAN));
        let (params, _) = bhw_embedding(theta, p)?;
        c.params = ParamsConfig::from(&params);
        c.bhw = Some(BhwConfig { theta, p });
    }
    if let Some(v) = args.steps {
        c.steps = v;
    }
    if let Some(v) = args.reps {
        c.reps = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = &args.snapshots {
        c.snapshots = v.clone();
    }
    if let Some(v) = args.grid_mode {
        c.grid_mode = v;
    }
    if let Some(v) = args.format {
        c.format = v;
    }
    if let Some(v) = args.tol {
        c.tol = Some(v);
    }
    c.validate()?;
    Ok(c)
}

/// Rendered output of one command.
pub struct Outcome {
    pub text: String,
    /// `false` only for a failing `verify`.
    pub pass: bool,
    /// Human-readable verdict lines (`verify` only).
    pub lines: Vec<String>,
}

pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome> {
    let params = config.model()?;
    let done = |text| Ok(Outcome { text, pass: true, lines: Vec::new() });
    match config.command {
        Command::Theory => {
            let report = theory_report(&params, config.bhw, config.tol);
            done(match config.format {
                Format::Json => output::json_document(config, output::THEORY_JSON, &report),
                Format::Csv => output::key_value_csv(config, output::THEORY_CSV, &report),
            })
        }
        Command::Simulate => {
            let engine = Engine::new(threads)?;
            let grid = config.resolved_grid()?;
            let seed = SeedSpec::new(config.seed);
            if config.reps.saturating_mul(grid.len() as u64) > config.memory_cap {
                let pairs = output::summary_pairs(grid.len());
                let summary = engine.streaming(&params, config.steps, &grid, &pairs, config.reps, seed)?;
                done(match config.format {
                    Format::Csv => output::summary_csv(config, &summary),
                    Format::Json => output::summary_json(config, &summary),
                })
            } else {
                let ens = engine.monte_carlo(&params, config.steps, &grid, config.reps, seed, config.memory_cap)?;
                done(match config.format {
                    Format::Csv => output::ensemble_csv(config, &ens),
                    Format::Json => output::ensemble_json(config, &ens),
                })
            }
        }
        Command::Exact => {
            let dist = exact_distribution(&params, config.steps)?;
            let moments = dist.moments(4)?;
            done(match config.format {
                Format::Csv => output::pmf_csv(config, &dist, &moments),
                Format::Json => output::pmf_json(config, &dist, &moments),
            })
        }
        Command::Verify => {
            let engine = Engine::new(threads)?;
            let report = run_suite(config, &engine)?;
            let text = match config.format {
                Format::Json => output::json_document(config, output::VERIFY_JSON, &report),
                Format::Csv => output::key_value_csv(config, output::VERIFY_CSV, &report),
            };
            Ok(Outcome { text, pass: report.pass, lines: report.lines() })
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let (command, suite, args) = match cli.command {
        Cmd::Theory(a) => (Command::Theory, None, a),
        Cmd::Simulate(a) => (Command::Simulate, None, a),
        Cmd::Exact(a) => (Command::Exact, None, a),
        Cmd::Verify { suite, args } => (Command::Verify, Some(suite), args),
    };
    let config = build_config(command, suite, &args)?;
    let outcome = execute(&config, args.threads)?;
    for line in &outcome.lines {
        eprintln!("{line}");
    }
    match &args.out {
        Some(path) => std::fs::write(path, &outcome.text)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(outcome.pass)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let report = serde_json::json!({ "error": "UsageError", "message": e.to_string().trim_end() });
            eprintln!("{report}");
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("{}", e.to_json());
            2
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        config_error(e.to_string())
    }
}
