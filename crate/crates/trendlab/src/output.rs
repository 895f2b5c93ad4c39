//! File formats.
//!
//! CSV files start with `#` comment lines carrying provenance (software
//! version, schema, the full configuration as JSON, its SHA-256, seed and
//! generator) followed by a single header row. Floats in CSV use 17
//! significant digits (`{:.16e}`); JSON floats use the shortest round-trip
//! representation. Nothing time- or host-dependent is written, so rerunning a
//! configuration reproduces its file byte for byte.
//!
//! | schema | columns |
//! |---|---|
//! | `ensemble-csv/1` | `replicate,step,n_count,m_count` |
//! | `summary-csv/1` | `step,count,mean,central2,central3,central4,cov_with_last` |
//! | `pmf-csv/1` | `k,prob` |
//! | `theory-csv/1` | `quantity,value` |

use std::fmt::Write as _;

use serde::Serialize;
use trendlab_core::exact::{ExactDist, ExactMoments};
use trendlab_core::rng::GENERATOR_NAME;
use trendlab_core::sim::{Ensemble, StreamingSummary};

use crate::config::ExperimentConfig;

pub const ENSEMBLE_CSV: &str = "ensemble-csv/1";
pub const ENSEMBLE_JSON: &str = "ensemble-json/1";
pub const SUMMARY_CSV: &str = "summary-csv/1";
pub const SUMMARY_JSON: &str = "summary-json/1";
pub const PMF_CSV: &str = "pmf-csv/1";
pub const PMF_JSON: &str = "pmf-json/1";
pub const THEORY_CSV: &str = "theory-csv/1";
pub const THEORY_JSON: &str = "theory-json/1";
pub const VERIFY_JSON: &str = "verify-json/1";
pub const VERIFY_CSV: &str = "verify-csv/1";

pub const SOFTWARE: &str = "trendlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub software: &'static str,
    pub version: &'static str,
    pub schema: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub generator: &'static str,
}

impl Provenance {
    pub fn new(config: &ExperimentConfig, schema: &'static str) -> Self {
        Provenance {
            software: SOFTWARE,
            version: VERSION,
            schema,
            config_sha256: config.hash(),
            seed: config.seed,
            generator: GENERATOR_NAME,
        }
    }
}

/// Provenance comment block for CSV files.
pub fn csv_preamble(config: &ExperimentConfig, schema: &'static str) -> String {
    let p = Provenance::new(config, schema);
    let mut out = String::new();
    writeln!(out, "# software: {} {}", p.software, p.version).unwrap();
    writeln!(out, "# schema: {}", p.schema).unwrap();
    writeln!(out, "# config: {}", config.to_json()).unwrap();
    writeln!(out, "# config_sha256: {}", p.config_sha256).unwrap();
    writeln!(out, "# seed: {}", p.seed).unwrap();
    writeln!(out, "# generator: {}", p.generator).unwrap();
    out
}

/// Extracts the embedded configuration from a CSV produced by this module.
pub fn embedded_config(csv: &str) -> Option<&str> {
    csv.lines().take_while(|l| l.starts_with('#')).find_map(|l| l.strip_prefix("# config: "))
}

/// JSON envelope shared by every structured output.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    pub provenance: Provenance,
    pub config: &'a ExperimentConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn json_document<T: Serialize>(config: &ExperimentConfig, schema: &'static str, body: T) -> String {
    let doc = Document { provenance: Provenance::new(config, schema), config, body };
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

pub fn ensemble_csv(config: &ExperimentConfig, ensemble: &Ensemble) -> String {
    let mut out = csv_preamble(config, ENSEMBLE_CSV);
    out.push_str("replicate,step,n_count,m_count\n");
    for r in 0..ensemble.replicates() {
        for s in 0..ensemble.grid().len() {
            let st = ensemble.state(s, r);
            writeln!(out, "{r},{},{},{}", st.step, st.n_count, st.m_count).unwrap();
        }
    }
    out
}

#[derive(Serialize)]
struct EnsembleBody<'a> {
    grid: &'a [u64],
    replicates: usize,
    /// `n_count[s][r]`.
    n_count: Vec<&'a [u64]>,
}

pub fn ensemble_json(config: &ExperimentConfig, ensemble: &Ensemble) -> String {
    let body = EnsembleBody {
        grid: ensemble.grid(),
        replicates: ensemble.replicates(),
        n_count: (0..ensemble.grid().len()).map(|s| ensemble.column(s)).collect(),
    };
    json_document(config, ENSEMBLE_JSON, body)
}

#[derive(Serialize)]
struct SummaryRow {
    step: u64,
    count: u64,
    mean: f64,
    central2: f64,
    central3: f64,
    central4: f64,
    cov_with_last: f64,
}

fn summary_rows(summary: &StreamingSummary) -> Vec<SummaryRow> {
    summary
        .grid
        .iter()
        .zip(&summary.moments)
        .zip(&summary.comoments)
        .map(|((&step, m), c)| SummaryRow {
            step,
            count: m.count(),
            mean: m.mean(),
            central2: m.central(2),
            central3: m.central(3),
            central4: m.central(4),
            cov_with_last: c.covariance(),
        })
        .collect()
}

/// Pairs `(s, last)` recorded in every streaming summary.
pub fn summary_pairs(grid_len: usize) -> Vec<(usize, usize)> {
    (0..grid_len).map(|s| (s, grid_len - 1)).collect()
}

pub fn summary_csv(config: &ExperimentConfig, summary: &StreamingSummary) -> String {
    let mut out = csv_preamble(config, SUMMARY_CSV);
    out.push_str("step,count,mean,central2,central3,central4,cov_with_last\n");
    for r in summary_rows(summary) {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.count,
            fmt_float(r.mean),
            fmt_float(r.central2),
            fmt_float(r.central3),
            fmt_float(r.central4),
            fmt_float(r.cov_with_last)
        )
        .unwrap();
    }
    out
}

pub fn summary_json(config: &ExperimentConfig, summary: &StreamingSummary) -> String {
    #[derive(Serialize)]
    struct Body {
        snapshots: Vec<SummaryRow>,
    }
    json_document(config, SUMMARY_JSON, Body { snapshots: summary_rows(summary) })
}

pub fn pmf_csv(config: &ExperimentConfig, dist: &ExactDist, moments: &ExactMoments) -> String {
    let mut out = csv_preamble(config, PMF_CSV);
    let join = |xs: &[f64]| xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(",");
    writeln!(out, "# raw_moments: {}", join(&moments.raw)).unwrap();
    writeln!(out, "# central_moments: {}", join(&moments.central)).unwrap();
    out.push_str("k,prob\n");
    for (k, p) in dist.iter() {
        writeln!(out, "{k},{}", fmt_float(p)).unwrap();
    }
    out
}

pub fn pmf_json(config: &ExperimentConfig, dist: &ExactDist, moments: &ExactMoments) -> String {
    #[derive(Serialize)]
    struct Body<'a> {
        n: u64,
        k: Vec<u64>,
        prob: Vec<f64>,
        raw_moments: &'a [f64],
        central_moments: &'a [f64],
    }
    let (k, prob) = dist.iter().unzip();
    json_document(
        config,
        PMF_JSON,
        Body { n: dist.n, k, prob, raw_moments: &moments.raw, central_moments: &moments.central },
    )
}

/// Flattens a JSON value into `quantity,value` rows (`a.b[0][1]` keys; nulls empty).
pub fn flatten_json(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_json(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::Number(n) => {
            let text = match (n.as_u64(), n.as_i64(), n.as_f64()) {
                (Some(u), _, _) => u.to_string(),
                (_, Some(i), _) => i.to_string(),
                (_, _, Some(f)) => fmt_float(f),
                _ => n.to_string(),
            };
            rows.push((prefix.to_string(), text));
        }
        Value::String(s) => rows.push((prefix.to_string(), csv_field(s))),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn key_value_csv(config: &ExperimentConfig, schema: &'static str, body: &impl Serialize) -> String {
    let value = serde_json::to_value(body).expect("body serializes");
    let mut rows = Vec::new();
    flatten_json("", &value, &mut rows);
    let mut out = csv_preamble(config, schema);
    out.push_str("quantity,value\n");
    for (k, v) in rows {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Command, Format, GridMode, ParamsConfig};
    use trendlab_core::exact::exact_distribution;
    use trendlab_core::rng::SeedSpec;
    use trendlab_core::sim::{monte_carlo, DEFAULT_MEMORY_CAP};

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            command: Command::Simulate,
            suite: None,
            params: ParamsConfig::P1,
            bhw: None,
            steps: 20,
            reps: 3,
            seed: 9,
            snapshots: vec![],
            grid_mode: GridMode::Steps,
            format: Format::Csv,
            tol: None,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.65, 0.1 + 0.2, 1.0 / 3.0, 1e-300, 123456.789] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(0.35), "3.4999999999999998e-1");
    }

    #[test]
    fn ensemble_layout() {
        let c = config();
        let ens = monte_carlo(&c.model().unwrap(), 20, &[10, 20], 3, SeedSpec::new(9), DEFAULT_MEMORY_CAP).unwrap();
        let csv = ensemble_csv(&c, &ens);
        let body: Vec<&str> = csv.lines().skip_while(|l| l.starts_with('#')).collect();
        assert_eq!(body[0], "replicate,step,n_count,m_count");
        assert_eq!(body.len(), 1 + 6);
        let row: Vec<u64> = body[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[0], 0);
        assert_eq!(row[1], 20);
        assert_eq!(row[2] + row[3], 22);
        assert_eq!(embedded_config(&csv).unwrap(), c.to_json());
        let back = ExperimentConfig::from_json(embedded_config(&csv).unwrap()).unwrap();
        assert_eq!(back, c);

        let json: serde_json::Value = serde_json::from_str(&ensemble_json(&c, &ens)).unwrap();
        assert_eq!(json["provenance"]["schema"], ENSEMBLE_JSON);
        assert_eq!(json["n_count"][1][2], ens.n_count(1, 2));
        assert_eq!(json["config"]["seed"], 9);
    }

    #[test]
    fn pmf_layout() {
        let c = config();
        let d = exact_distribution(&c.model().unwrap(), 1).unwrap();
        let m = d.moments(4).unwrap();
        let csv = pmf_csv(&c, &d, &m);
        let body: Vec<&str> = csv.lines().skip_while(|l| l.starts_with('#')).collect();
        assert_eq!(body[0], "k,prob");
        let rows: Vec<(u64, f64)> = body[1..]
            .iter()
            .map(|l| {
                let (k, p) = l.split_once(',').unwrap();
                (k.parse().unwrap(), p.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, 1);
        assert!((rows[0].1 - 0.65).abs() < 1e-15 && (rows[1].1 - 0.35).abs() < 1e-15);
    }

    #[test]
    fn flattening() {
        let v = serde_json::json!({"a": [[1.5, 2]], "b": null, "c": {"d": "x,y"}});
        let mut rows = Vec::new();
        flatten_json("", &v, &mut rows);
        assert_eq!(
            rows,
            [
                ("a[0][0]".to_string(), fmt_float(1.5)),
                ("a[0][1]".to_string(), "2".to_string()),
                ("b".to_string(), String::new()),
                ("c.d".to_string(), "\"x,y\"".to_string()),
            ]
        );
    }
}
