use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::dcsbm::GenerationMethod;
use crate::error::{Error, Result};
use crate::estimators::Estimator;

pub const SD_CONVENTION: &str =
    "sd uses the M-1 denominator (0 when M = 1); rmse = sqrt(mean squared error), so rmse^2 = bias^2 + sd^2 (M-1)/M";

pub const CSV_HEADER: [&str; 8] = [
    "network_id",
    "axis_value",
    "estimator",
    "abs_bias",
    "sd",
    "rmse",
    "mu_true",
    "failures",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mean: f64,
    pub abs_bias: f64,
    pub sd: f64,
    pub rmse: f64,
}

/// Metrics of replicate estimates against `truth`; `None` when empty.
/// Sums run in index order.
pub fn summarize(values: &[f64], truth: f64) -> Option<Metrics> {
    if values.is_empty() {
        return None;
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = if values.len() > 1 { (ss / (m - 1.0)).sqrt() } else { 0.0 };
    let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / m;
    Some(Metrics {
        mean,
        abs_bias: (mean - truth).abs(),
        sd,
        rmse: mse.sqrt(),
    })
}

/// One CSV row: metrics of one estimator on one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub network_id: usize,
    pub axis_value: Option<f64>,
    pub estimator: Estimator,
    pub abs_bias: Option<f64>,
    pub sd: Option<f64>,
    pub rmse: Option<f64>,
    pub mu_true: f64,
    /// Replicates without an estimate, from sampling or estimator failure.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub network_id: usize,
    pub axis_value: Option<f64>,
    pub original_node_count: usize,
    pub lcc_size: usize,
    pub block_sizes: Vec<usize>,
    pub mean_degree: f64,
    pub mu_true: f64,
    pub block_means: Vec<Option<f64>>,
    pub clamped_pairs: u64,
    pub generation_method: Option<GenerationMethod>,
    pub total_restarts: usize,
    pub sampling_failures: usize,
    /// Replicates where PS needed count smoothing.
    pub smoothing_applied: usize,
    /// Replicates where PS left a seed-only block out.
    pub dropped_block_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub sd_convention: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub networks: Vec<NetworkMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    /// CSV at the path plus a JSON twin beside it.
    #[default]
    Csv,
    Json,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::arg(format!("csv output: {e}"));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.network_id.to_string(),
                fmt_opt(r.axis_value),
                r.estimator.name().to_string(),
                fmt_opt(r.abs_bias),
                fmt_opt(r.sd),
                fmt_opt(r.rmse),
                r.mu_true.to_string(),
                r.failures.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::arg(format!("csv output: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "experiment report".into(),
            source,
        })
    }
}

/// Path of the JSON twin written next to a CSV report.
pub fn json_twin(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_report(report: &ExperimentReport, path: &Path, format: ReportFormat) -> Result<()> {
    let write = |p: &Path, text: &str| std::fs::write(p, text).map_err(|e| Error::io(p, e));
    match format {
        ReportFormat::Csv => {
            let twin = json_twin(path);
            if twin == path {
                return Err(Error::arg(format!(
                    "{} would be overwritten by its JSON twin; use a .csv name",
                    path.display()
                )));
            }
            write(path, &report.to_csv_string())?;
            write(&twin, &report.to_json_string())
        }
        ReportFormat::Json => write(path, &report.to_json_string()),
    }
}
