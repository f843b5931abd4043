//! Result rows, CSV serialization and the JSON sidecar.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::link::LinkBudget;
use crate::stats::Welford;

pub const CSV_HEADER: &str = "experiment,sweep_name,sweep_value,metric,mean,stderr,trials,seed";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ResultRow {
    pub fn from_stats(experiment: &str, sweep_name: &str, sweep_value: f64, metric: &str, w: &Welford, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            sweep_name: sweep_name.to_string(),
            sweep_value,
            metric: metric.to_string(),
            mean: w.mean(),
            stderr: w.stderr(),
            trials: w.count(),
            seed,
        }
    }

    fn order(&self, other: &Self) -> Ordering {
        self.experiment
            .cmp(&other.experiment)
            .then_with(|| self.sweep_name.cmp(&other.sweep_name))
            .then_with(|| self.sweep_value.total_cmp(&other.sweep_value))
            .then_with(|| self.metric.cmp(&other.metric))
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.order(b));
}

/// Rows sorted and rendered with a fixed header.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment, r.sweep_name, r.sweep_value, r.metric, r.mean, r.stderr, r.trials, r.seed
        );
    }
    out
}

/// Parses a CSV produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("missing or unexpected header".into());
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(format!("expected 8 fields in `{l}`"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
            let int = |s: &str| s.parse::<u64>().map_err(|e| format!("`{s}`: {e}"));
            Ok(ResultRow {
                experiment: f[0].into(),
                sweep_name: f[1].into(),
                sweep_value: num(f[2])?,
                metric: f[3].into(),
                mean: num(f[4])?,
                stderr: num(f[5])?,
                trials: int(f[6])?,
                seed: int(f[7])?,
            })
        })
        .collect()
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'a str,
    tool_version: &'a str,
    config: &'a ExperimentConfig,
    link_budget: LinkBudget,
    rows: usize,
}

pub fn sidecar_json(experiment: &str, cfg: &ExperimentConfig, rows: usize) -> String {
    let s = Sidecar {
        experiment,
        tool_version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        link_budget: LinkBudget::new(&cfg.system),
        rows,
    };
    serde_json::to_string_pretty(&s).expect("sidecar serializes")
}

/// Writes the CSV and its `.json` sidecar.
pub fn write_outputs(path: &Path, experiment: &str, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_csv(rows))?;
    std::fs::write(sidecar_path(path), sidecar_json(experiment, cfg, rows.len()))?;
    Ok(())
}
