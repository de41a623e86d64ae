//! Variance scaling of VH and PS on complete binary referral trees.
//!
//! One two-block graph with affinity `∝ [[1−p, p], [p, 1−p]]` is held fixed;
//! for each tree size `n = 2^L − 1` the study draws independent
//! with-replacement samples from degree-proportional seeds and records the
//! variance of each estimator. The slope of `log Var` against `log n` is fit
//! by least squares.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_network, NetworkSpec};
use crate::dcsbm::{GenerationMethod, ThetaMode};
use crate::error::{Error, Result};
use crate::estimators::{self, Estimator, EstimatorContext, DEFAULT_SMOOTHING};
use crate::oracle::{check_scaling_precondition, predicted_vh_slope};
use crate::rng::{stream, Purpose};
use crate::sampling::{sample_with_replacement, SamplingTree, SeedPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    #[serde(default)]
    pub master_seed: u64,
    /// Flip probability; the block chain has eigenvalue `1 − 2p`.
    pub p: f64,
    /// Tree depths `L`; tree sizes are `2^L − 1`.
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_node_count")]
    pub node_count: usize,
    #[serde(default = "default_mean_degree")]
    pub mean_degree: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_levels() -> Vec<usize> {
    vec![6, 7, 8, 9, 10]
}
fn default_node_count() -> usize {
    20_000
}
fn default_mean_degree() -> f64 {
    100.0
}
fn default_replicates() -> usize {
    2000
}
fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Vh, Estimator::Ps]
}
fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

impl ScalingConfig {
    pub fn new(master_seed: u64, p: f64) -> Self {
        Self {
            master_seed,
            p,
            levels: default_levels(),
            node_count: default_node_count(),
            mean_degree: default_mean_degree(),
            replicates: default_replicates(),
            estimators: default_estimators(),
            smoothing: default_smoothing(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "scaling config".into(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub estimator: Estimator,
    pub n: usize,
    pub mean: f64,
    /// Over replicates, `M − 1` denominator.
    pub variance: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` with fewer than three points.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorFit {
    pub estimator: Estimator,
    pub fit: SlopeFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub zeta: f64,
    pub predicted_vh_slope: f64,
    pub lcc_size: usize,
    pub points: Vec<ScalingPoint>,
    pub fits: Vec<EstimatorFit>,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::arg("slope fit needs at least two paired points"));
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::arg("slope fit needs distinct x values"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let std_error = (x.len() > 2).then(|| {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ssr / (k - 2.0) / sxx).sqrt()
    });
    Ok(SlopeFit {
        slope,
        intercept,
        std_error,
    })
}

pub fn variance_scaling_study(cfg: &ScalingConfig) -> Result<ScalingReport> {
    let zeta = check_scaling_precondition(cfg.p)?;
    if cfg.levels.len() < 2 || cfg.levels.iter().any(|&l| l == 0 || l > 24) {
        return Err(Error::arg("need at least two tree depths, each in 1..=24"));
    }
    if cfg.replicates < 2 {
        return Err(Error::arg("need at least two replicates per tree size"));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::arg("no estimators requested"));
    }
    let spec = NetworkSpec::Bottleneck {
        node_count: cfg.node_count,
        num_blocks: 2,
        strength: 1.0 - 2.0 * cfg.p,
        mean_degree: cfg.mean_degree,
        theta_mode: ThetaMode::Homogeneous,
    };
    let net = build_network(&spec, GenerationMethod::Auto, cfg.master_seed, 0)?;
    let y: Vec<f64> = net.labels.labels().iter().map(|&z| z as f64).collect();
    let ctx = EstimatorContext {
        mean_degree: Some(net.graph.mean_degree()),
        num_blocks: Some(2),
        smoothing: cfg.smoothing,
    };

    let mut points = Vec::new();
    for (li, &levels) in cfg.levels.iter().enumerate() {
        let tree = SamplingTree::complete_ary(2, levels);
        let per_rep: Vec<Vec<Option<f64>>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(cfg.master_seed, Purpose::Sample, &[li as u64, r as u64]);
                let s = sample_with_replacement(
                    &net.graph,
                    &tree,
                    SeedPolicy::DegreeProportional,
                    &y,
                    Some(&net.labels),
                    &mut rng,
                )?;
                Ok(cfg
                    .estimators
                    .iter()
                    .map(|&e| estimators::evaluate(e, &s, &ctx).ok().map(|r| r.value))
                    .collect())
            })
            .collect::<Result<_>>()?;
        for (e, &est) in cfg.estimators.iter().enumerate() {
            let v: Vec<f64> = per_rep.iter().filter_map(|r| r[e]).collect();
            let m = v.len() as f64;
            let mean = v.iter().sum::<f64>() / m;
            let variance = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            points.push(ScalingPoint {
                estimator: est,
                n: tree.len(),
                mean,
                variance,
                failures: cfg.replicates - v.len(),
            });
        }
    }

    let fits = cfg
        .estimators
        .iter()
        .map(|&est| {
            let (x, y): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.estimator == est)
                .map(|p| ((p.n as f64).ln(), p.variance.ln()))
                .unzip();
            Ok(EstimatorFit {
                estimator: est,
                fit: fit_slope(&x, &y)?,
            })
        })
        .collect::<Result<_>>()?;

    Ok(ScalingReport {
        config: cfg.clone(),
        zeta,
        predicted_vh_slope: predicted_vh_slope(cfg.p),
        lcc_size: net.graph.node_count(),
        points,
        fits,
    })
}

impl ScalingReport {
    pub fn fit_for(&self, est: Estimator) -> Option<SlopeFit> {
        self.fits.iter().find(|f| f.estimator == est).map(|f| f.fit)
    }

    /// One row per (estimator, n), with that estimator's fitted slope repeated.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::arg(format!("csv output: {e}"));
        w.write_record([
            "estimator",
            "n",
            "mean",
            "variance",
            "failures",
            "slope",
            "slope_se",
            "predicted_vh_slope",
        ])
        .map_err(csv_err)?;
        for p in &self.points {
            let fit = self.fit_for(p.estimator).expect("every estimator is fitted");
            w.write_record([
                p.estimator.name().to_string(),
                p.n.to_string(),
                p.mean.to_string(),
                p.variance.to_string(),
                p.failures.to_string(),
                fit.slope.to_string(),
                fit.std_error.map(|s| s.to_string()).unwrap_or_default(),
                self.predicted_vh_slope.to_string(),
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
}
