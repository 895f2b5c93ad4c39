//! Experiment configuration: the single source for every run and the record
//! embedded in every output file.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trendlab_core::ModelParams;

use crate::error::{config_error, Result};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Environment variable overriding the stored-ensemble cell limit.
pub const MEM_CAP_ENV: &str = "TRENDLAB_MEM_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n0: u64,
    pub m0: u64,
}

impl ParamsConfig {
    pub const fn new(a: f64, b: f64, alpha: f64, beta: f64, n0: u64, m0: u64) -> Self {
        ParamsConfig { a, b, alpha, beta, n0, m0 }
    }

    /// Diffusive reference set, `λ2 = 0.1`.
    pub const P1: ParamsConfig = ParamsConfig::new(0.3, 0.2, 0.6, 0.1, 1, 1);
    /// Critical reference set, `λ2 = 1/2`.
    pub const P2: ParamsConfig = ParamsConfig::new(0.25, 0.5, 1.0, 0.0, 1, 1);
    /// Superdiffusive elephant set, `λ2 = 0.6`, one initial `A`.
    pub const P3: ParamsConfig = ParamsConfig::new(0.2, 0.6, 1.0, 0.0, 1, 0);
    /// Negative-`λ2` set, `λ2 = -0.12`.
    pub const NEGATIVE: ParamsConfig = ParamsConfig::new(0.5, 0.3, 0.2, 0.6, 1, 1);

    pub fn build(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.a, self.b, self.alpha, self.beta, self.n0, self.m0)?)
    }
}

impl From<&ModelParams> for ParamsConfig {
    fn from(p: &ModelParams) -> Self {
        ParamsConfig::new(p.a(), p.b(), p.alpha(), p.beta(), p.n0(), p.m0())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// Absolute step counts.
    Steps,
    /// `⌊t n⌋` for each fraction `t`.
    Fractions,
    /// `⌊n^t⌋` for each exponent `t`.
    Powers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lln,
    Clt,
    Critical,
    Scaling,
    Elephant,
    Functional,
    Oracle,
    Analytic,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Lln => "lln",
            Suite::Clt => "clt",
            Suite::Critical => "critical",
            Suite::Scaling => "scaling",
            Suite::Elephant => "elephant",
            Suite::Functional => "functional",
            Suite::Oracle => "oracle",
            Suite::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Theory,
    Simulate,
    Exact,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BhwConfig {
    pub theta: f64,
    pub p: f64,
}

/// Everything that determines a run's output. Thread count and output path
/// are deliberately absent: they never change the bytes written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub suite: Option<Suite>,
    pub params: ParamsConfig,
    pub bhw: Option<BhwConfig>,
    pub steps: u64,
    pub reps: u64,
    pub seed: u64,
    pub snapshots: Vec<f64>,
    pub grid_mode: GridMode,
    pub format: Format,
    pub tol: Option<f64>,
    pub memory_cap: u64,
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<ModelParams> {
        self.params.build()
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if self.command == Command::Verify && self.suite.is_none() {
            return Err(config_error("verify needs a suite"));
        }
        if self.command != Command::Verify && self.suite.is_some() {
            return Err(config_error("only verify takes a suite"));
        }
        if matches!(self.command, Command::Simulate | Command::Verify) && self.reps == 0 {
            return Err(config_error("reps must be at least 1"));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(config_error("tol must be positive and finite"));
            }
        }
        if let Some(bhw) = self.bhw {
            if self.command != Command::Theory {
                return Err(config_error("the BHW embedding is only available to theory"));
            }
            trendlab_core::theory::bhw_embedding(bhw.theta, bhw.p)?;
        }
        if self.command == Command::Simulate {
            self.resolved_grid()?;
        }
        Ok(())
    }

    /// Snapshot steps; an empty `snapshots` list means `[steps]`.
    pub fn resolved_grid(&self) -> Result<Vec<u64>> {
        resolve_grid(&self.snapshots, self.grid_mode, self.steps)
    }

    /// Compact JSON; floats print as the shortest string that round-trips.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Hex SHA-256 of [`ExperimentConfig::to_json`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `x` rounded to an integer when within 1e-9 relative of one, floored otherwise.
fn floor_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

pub fn resolve_grid(values: &[f64], mode: GridMode, steps: u64) -> Result<Vec<u64>> {
    if values.is_empty() {
        return Ok(vec![steps]);
    }
    let n = steps as f64;
    let mut grid = Vec::with_capacity(values.len());
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(config_error(format!("snapshot value {v} must be finite and non-negative")));
        }
        let step = match mode {
            GridMode::Steps => {
                if v.fract() != 0.0 {
                    return Err(config_error(format!("snapshot step {v} is not an integer")));
                }
                v
            }
            GridMode::Fractions | GridMode::Powers if v > 1.0 => {
                return Err(config_error(format!("snapshot time {v} exceeds 1")));
            }
            GridMode::Fractions => floor_tolerant(v * n),
            GridMode::Powers => floor_tolerant(n.powf(v)),
        };
        if step > n {
            return Err(config_error(format!("snapshot {step} is beyond step {steps}")));
        }
        grid.push(step as u64);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_error("snapshot steps must be strictly increasing after resolution"));
    }
    Ok(grid)
}

/// Reads the memory cap from [`MEM_CAP_ENV`], falling back to the core default.
pub fn memory_cap_from_env() -> Result<u64> {
    match std::env::var(MEM_CAP_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| config_error(format!("{MEM_CAP_ENV} must be a non-negative integer, got {text:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(trendlab_core::sim::DEFAULT_MEMORY_CAP),
        Err(e) => Err(config_error(format!("{MEM_CAP_ENV}: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            command: Command::Simulate,
            suite: None,
            params: ParamsConfig::P1,
            bhw: None,
            steps: 1000,
            reps: 10,
            seed: 7,
            snapshots: vec![0.1, 0.5, 1.0],
            grid_mode: GridMode::Fractions,
            format: Format::Csv,
            tol: None,
            memory_cap: 1 << 20,
        }
    }

    #[test]
    fn grids() {
        assert_eq!(resolve_grid(&[], GridMode::Steps, 50).unwrap(), [50]);
        assert_eq!(resolve_grid(&[0.0, 10.0, 50.0], GridMode::Steps, 50).unwrap(), [0, 10, 50]);
        assert_eq!(resolve_grid(&[0.5, 1.0], GridMode::Fractions, 10_000).unwrap(), [5000, 10_000]);
        assert_eq!(resolve_grid(&[0.5, 1.0], GridMode::Powers, 10_000).unwrap(), [100, 10_000]);
        assert_eq!(resolve_grid(&[0.2], GridMode::Powers, 100_000).unwrap(), [10]);
        assert!(resolve_grid(&[1.5], GridMode::Steps, 50).is_err());
        assert!(resolve_grid(&[60.0], GridMode::Steps, 50).is_err());
        assert!(resolve_grid(&[1.2], GridMode::Fractions, 50).is_err());
        assert!(resolve_grid(&[0.5, 0.5], GridMode::Fractions, 50).is_err());
        assert!(resolve_grid(&[0.01, 0.015], GridMode::Fractions, 50).is_err());
    }

    #[test]
    fn validation() {
        let mut c = sample();
        assert!(c.validate().is_ok());
        c.reps = 0;
        assert!(c.validate().is_err());
        let mut c = sample();
        c.params.a = 1.5;
        assert!(matches!(c.validate(), Err(crate::error::CliError::Model(_))));
        let mut c = sample();
        c.suite = Some(Suite::Lln);
        assert!(c.validate().is_err());
        let mut c = sample();
        c.tol = Some(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = sample();
        assert_eq!(a.hash(), sample().hash());
        assert_eq!(a.hash().len(), 64);
        let mut b = sample();
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = sample().to_json().replacen('{', "{\"threads\":4,", 1);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(a in 0.0..0.5f64, b in 0.0..0.5f64, alpha in 0.0..1.0f64, seed in any::<u64>(), tol in proptest::option::of(1e-12..1.0f64)) {
            let mut c = sample();
            c.params = ParamsConfig::new(a, b, alpha, 0.0, 1, 1);
            c.seed = seed;
            c.tol = tol;
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.hash(), c.hash());
        }
    }
}
