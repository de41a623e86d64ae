//! Monte Carlo harness.
//!
//! A run generates `networks` graphs, restricts each to its largest connected
//! component, computes `μ_true` on that component, then draws
//! `samples_per_network` RDS samples per graph and evaluates every requested
//! estimator on each. All randomness comes from streams derived from the
//! master seed and the network/replicate indices, so the report does not
//! depend on the number of worker threads.
//!
//! Stream layout: network `g` uses `(Network, [g])` for the graph and
//! `(Outcome, [g])` for the outcome; replicate `r` of network `g` uses
//! `(Sample, [g, r])`. Sweep points reuse the same indices, so two points
//! differ only in the swept factor whenever that factor leaves the stream
//! consumption unchanged.

mod report;
mod scaling;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcsbm::{
    self, bottleneck_affinity, homogeneous_theta, powerlaw_theta, scale_to_mean_degree,
    DcsbmConfig, DcsbmParams, GenerationMethod, ThetaMode,
};
use crate::error::{Error, Result};
use crate::estimators::{self, Estimator, EstimatorContext, DEFAULT_SMOOTHING};
use crate::graph::{largest_connected_component, load_edge_list, load_labels, load_values, BlockAssignment, Graph};
use crate::rng::{stream, Purpose};
use crate::sampling::{
    sample_with_replacement, sample_without_replacement, RdsSample, RecruitmentSpec, SamplingTree,
    SeedPolicy, DEFAULT_MAX_RESTARTS,
};

pub use report::{
    summarize, write_report, ExperimentReport, Metrics, NetworkMeta, ReportFormat, ReportRow,
    SD_CONVENTION,
};
pub use scaling::{
    fit_slope, variance_scaling_study, EstimatorFit, ScalingConfig, ScalingPoint, ScalingReport, SlopeFit,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkSpec {
    /// `K` near-equal blocks, relative affinity `p` on the diagonal and
    /// `1 − p` elsewhere, with bottleneck strength `p − q`.
    Bottleneck {
        node_count: usize,
        #[serde(default = "default_blocks")]
        num_blocks: usize,
        strength: f64,
        mean_degree: f64,
        #[serde(default)]
        theta_mode: ThetaMode,
    },
    Dcsbm {
        model: DcsbmConfig,
    },
    /// Fixed observed network; every "network" replicate is the same graph.
    EdgeList {
        path: PathBuf,
        labels: PathBuf,
    },
}

fn default_blocks() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeSpec {
    /// `y(i) = 1{z(i) = block}`.
    BlockIndicator {
        #[serde(default = "default_indicator_block")]
        block: usize,
    },
    /// Two blocks, `y(i) ~ Bernoulli(q_{z(i)})` with `q_1 = (1 + a)/2` and
    /// `q_0 = (1 − a)/2`. `a = 1` gives the block indicator.
    Alignment { alignment: f64 },
    /// `y(i) ~ Bernoulli(means[z(i)])`.
    Bernoulli { means: Vec<f64> },
    /// Values per original node id, one `id value` pair per line.
    File { path: PathBuf },
}

fn default_indicator_block() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    WithoutReplacement,
    WithReplacement,
}

/// Referral tree used in with-replacement mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeSpec {
    /// Galton–Watson tree with Poisson(`lambda`) offspring, `n_target` nodes.
    #[default]
    Poisson,
    /// Full tree; `n_target` is ignored.
    Complete { arity: usize, levels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    #[serde(default)]
    pub mode: SamplingMode,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub n_target: usize,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    #[serde(default = "default_max_restarts")]
    pub max_restarts: usize,
    #[serde(default)]
    pub tree: TreeSpec,
}

fn default_lambda() -> f64 {
    2.0
}

fn default_max_restarts() -> usize {
    DEFAULT_MAX_RESTARTS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationSpec {
    pub networks: usize,
    pub samples_per_network: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Bottleneck strength `p − q`.
    Bottleneck,
    /// `q_1 − q_0` of the alignment outcome.
    Alignment,
    /// Expected mean degree.
    Density,
    /// Node count, with mean degree `⌊√N / 3⌋`.
    NetworkSize,
    /// `n_target`.
    SampleSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Command-line runs replace this with `--seed`.
    #[serde(default)]
    pub master_seed: u64,
    pub network: NetworkSpec,
    pub outcome: OutcomeSpec,
    pub sampling: SamplingSpec,
    pub replication: ReplicationSpec,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    #[serde(default)]
    pub generation: GenerationMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_estimators() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

fn json_err(context: impl Into<String>) -> impl FnOnce(serde_json::Error) -> Error {
    let context = context.into();
    move |source| Error::Json { context, source }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(json_err("experiment config"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let NetworkSpec::EdgeList { path, labels } = &mut self.network {
            fix(path);
            fix(labels);
        }
        if let OutcomeSpec::File { path } = &mut self.outcome {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.replication;
        if r.networks == 0 || r.samples_per_network == 0 {
            return Err(Error::arg("networks and samples_per_network must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::arg("no estimators requested"));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::arg("smoothing must be non-negative"));
        }
        let s = &self.sampling;
        if !(s.lambda.is_finite() && s.lambda > 0.0) {
            return Err(Error::arg("lambda must be positive"));
        }
        match s.tree {
            TreeSpec::Complete { arity, levels } if arity == 0 || levels == 0 => {
                return Err(Error::arg("complete tree needs positive arity and levels"))
            }
            _ if s.n_target == 0 => return Err(Error::arg("n_target must be at least 1")),
            _ => {}
        }
        if let NetworkSpec::Bottleneck {
            node_count,
            num_blocks,
            strength,
            mean_degree,
            ..
        } = &self.network
        {
            bottleneck_affinity(*num_blocks, *strength)?;
            if *num_blocks == 0 || node_count < num_blocks {
                return Err(Error::arg("need at least one node per block"));
            }
            if !(mean_degree.is_finite() && *mean_degree > 0.0) {
                return Err(Error::arg("mean degree must be positive"));
            }
        }
        match &self.outcome {
            OutcomeSpec::Alignment { alignment } if !(-1.0..=1.0).contains(alignment) => {
                return Err(Error::arg(format!("alignment must lie in [-1, 1], got {alignment}")))
            }
            OutcomeSpec::Bernoulli { means } if means.iter().any(|m| !(0.0..=1.0).contains(m)) => {
                return Err(Error::arg("Bernoulli means must lie in [0, 1]"))
            }
            _ => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::arg("sweep has no values"));
            }
            for &v in &sweep.values {
                self.at_axis(sweep.axis, v)?;
            }
        }
        Ok(())
    }

    /// Copy of `self` with the swept factor set to `value` and no sweep.
    pub fn at_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.sweep = None;
        let as_count = |v: f64, what: &str| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(Error::arg(format!("{what} must be a positive integer, got {v}")))
            }
        };
        match (axis, &mut cfg.network, &mut cfg.outcome) {
            (SweepAxis::Bottleneck, NetworkSpec::Bottleneck { strength, .. }, _) => *strength = value,
            (SweepAxis::Density, NetworkSpec::Bottleneck { mean_degree, .. }, _) => *mean_degree = value,
            (SweepAxis::Density, NetworkSpec::Dcsbm { model }, _) => model.target_mean_degree = value,
            (SweepAxis::NetworkSize, NetworkSpec::Bottleneck { node_count, mean_degree, .. }, _) => {
                let n = as_count(value, "network size")?;
                *node_count = n;
                *mean_degree = ((n as f64).sqrt() / 3.0).floor();
                if *mean_degree < 1.0 {
                    return Err(Error::arg(format!("network size {n} is too small")));
                }
            }
            (SweepAxis::Alignment, _, outcome) => {
                if matches!(outcome, OutcomeSpec::File { .. } | OutcomeSpec::Bernoulli { .. }) {
                    return Err(Error::arg("alignment sweep needs an alignment or block-indicator outcome"));
                }
                *outcome = OutcomeSpec::Alignment { alignment: value };
            }
            (SweepAxis::SampleSize, _, _) => {
                if matches!(cfg.sampling.tree, TreeSpec::Complete { .. })
                    && cfg.sampling.mode == SamplingMode::WithReplacement
                {
                    return Err(Error::arg("sample-size sweep does not apply to complete trees"));
                }
                cfg.sampling.n_target = as_count(value, "sample size")?;
            }
            (axis, _, _) => {
                return Err(Error::arg(format!(
                    "sweep axis {axis:?} does not apply to this network spec"
                )))
            }
        }
        Ok(cfg)
    }
}

/// A generated or loaded network restricted to its largest component.
#[derive(Debug, Clone)]
pub struct Network {
    pub graph: Graph,
    pub labels: BlockAssignment,
    /// Node count before the component restriction.
    pub original_node_count: usize,
    /// Original id of each kept node.
    pub new_to_old: Vec<usize>,
    pub clamped_pairs: u64,
    pub method: Option<GenerationMethod>,
    /// Model parameters over the original nodes, when generated.
    pub params: Option<DcsbmParams>,
}

/// Model parameters and labels for a network spec; `None` for edge lists.
pub fn model_params<R: Rng + ?Sized>(
    spec: &NetworkSpec,
    rng: &mut R,
) -> Result<Option<(DcsbmParams, BlockAssignment)>> {
    match spec {
        NetworkSpec::Bottleneck {
            node_count,
            num_blocks,
            strength,
            mean_degree,
            theta_mode,
        } => {
            let k = *num_blocks;
            let sizes: Vec<usize> = (0..k)
                .map(|b| node_count / k + usize::from(b < node_count % k))
                .collect();
            let labels = BlockAssignment::contiguous(&sizes)?;
            let b_rel = bottleneck_affinity(k, *strength)?;
            let affinity = scale_to_mean_degree(&b_rel, &sizes, *mean_degree)?;
            let theta = match theta_mode {
                ThetaMode::Homogeneous => homogeneous_theta(&labels),
                ThetaMode::Powerlaw { exponent } => powerlaw_theta(&labels, *exponent, rng)?,
            };
            Ok(Some((DcsbmParams::new(sizes, affinity, theta, &labels)?, labels)))
        }
        NetworkSpec::Dcsbm { model } => model.build(rng).map(Some),
        NetworkSpec::EdgeList { .. } => Ok(None),
    }
}

/// Builds network `index` of a configuration.
pub fn build_network(
    spec: &NetworkSpec,
    method: GenerationMethod,
    master_seed: u64,
    index: usize,
) -> Result<Network> {
    let mut rng = stream(master_seed, Purpose::Network, &[index as u64]);
    let (full, labels, clamped_pairs, method, params) = match model_params(spec, &mut rng)? {
        Some((params, labels)) => {
            let gen = dcsbm::generate_with(&params, &labels, method, &mut rng)?;
            (gen.graph, labels, gen.clamped_pairs, Some(gen.method), Some(params))
        }
        None => {
            let NetworkSpec::EdgeList { path, labels } = spec else {
                unreachable!("only edge lists lack model parameters")
            };
            let g = load_edge_list(open(path)?)?;
            let l = load_labels(open(labels)?, g.node_count())?;
            (g, l, 0, None, None)
        }
    };
    let lcc = largest_connected_component(&full);
    if lcc.graph.total_degree() <= 0.0 {
        return Err(Error::arg("network has no edges"));
    }
    Ok(Network {
        labels: labels.restrict(&lcc.new_to_old),
        graph: lcc.graph,
        original_node_count: full.node_count(),
        new_to_old: lcc.new_to_old,
        clamped_pairs,
        method,
        params,
    })
}

/// Outcome values on the kept nodes of `net`.
pub fn build_outcome(
    spec: &OutcomeSpec,
    net: &Network,
    master_seed: u64,
    index: usize,
) -> Result<Vec<f64>> {
    let k = net.labels.num_blocks();
    let bernoulli = |means: &[f64]| -> Vec<f64> {
        // one uniform per original node keeps draws aligned across sweeps
        let mut rng = stream(master_seed, Purpose::Outcome, &[index as u64]);
        let u: Vec<f64> = (0..net.original_node_count).map(|_| rng.random()).collect();
        net.new_to_old
            .iter()
            .enumerate()
            .map(|(i, &old)| f64::from(u8::from(u[old] < means[net.labels.block_of(i)])))
            .collect()
    };
    match spec {
        OutcomeSpec::BlockIndicator { block } => {
            if *block >= k {
                return Err(Error::arg(format!("indicator block {block} out of range for K = {k}")));
            }
            Ok(net
                .labels
                .labels()
                .iter()
                .map(|&z| f64::from(u8::from(z == *block)))
                .collect())
        }
        OutcomeSpec::Alignment { alignment } => {
            if k != 2 {
                return Err(Error::arg("alignment outcome needs exactly two blocks"));
            }
            Ok(bernoulli(&[(1.0 - alignment) / 2.0, (1.0 + alignment) / 2.0]))
        }
        OutcomeSpec::Bernoulli { means } => {
            if means.len() != k {
                return Err(Error::arg(format!("{} means for K = {k}", means.len())));
            }
            Ok(bernoulli(means))
        }
        OutcomeSpec::File { path } => {
            let all = load_values(open(path)?, net.original_node_count)?;
            Ok(net.new_to_old.iter().map(|&old| all[old]).collect())
        }
    }
}

/// Draws one sample per the sampling spec.
pub fn draw_sample<R: Rng + ?Sized>(
    spec: &SamplingSpec,
    g: &Graph,
    y: &[f64],
    labels: &BlockAssignment,
    rng: &mut R,
) -> Result<RdsSample> {
    match spec.mode {
        SamplingMode::WithoutReplacement => sample_without_replacement(
            g,
            spec.seed_policy,
            RecruitmentSpec {
                lambda: spec.lambda,
                n_target: spec.n_target,
                max_restarts: spec.max_restarts,
            },
            y,
            Some(labels),
            rng,
        ),
        SamplingMode::WithReplacement => {
            let (tree, restarts) = match spec.tree {
                TreeSpec::Complete { arity, levels } => (SamplingTree::complete_ary(arity, levels), 0),
                TreeSpec::Poisson => {
                    let mut restarts = 0;
                    loop {
                        match SamplingTree::poisson(rng, spec.lambda, spec.n_target)? {
                            Ok(t) => break (t, restarts),
                            Err(_) if restarts < spec.max_restarts => restarts += 1,
                            Err(_) => return Err(Error::SamplingFailure { restarts }),
                        }
                    }
                }
            };
            let mut s = sample_with_replacement(g, &tree, spec.seed_policy, y, Some(labels), rng)?;
            s.restarts = restarts;
            Ok(s)
        }
    }
}

/// Outcome of one replicate: estimates in config order, or the reason it failed.
#[derive(Debug, Clone)]
struct Replicate {
    restarts: usize,
    sampled: bool,
    estimates: Vec<Option<f64>>,
    smoothing_applied: bool,
    dropped_blocks: bool,
}

fn run_network(cfg: &ExperimentConfig, index: usize, axis_value: Option<f64>) -> Result<(Vec<ReportRow>, NetworkMeta)> {
    let net = build_network(&cfg.network, cfg.generation, cfg.master_seed, index)?;
    let y = build_outcome(&cfg.outcome, &net, cfg.master_seed, index)?;
    let n = net.graph.node_count();
    let mu_true = y.iter().sum::<f64>() / n as f64;
    let k = net.labels.num_blocks();
    let block_sizes = net.labels.block_sizes();
    let mut block_means = vec![0.0; k];
    for (i, &v) in y.iter().enumerate() {
        block_means[net.labels.block_of(i)] += v;
    }
    let block_means: Vec<Option<f64>> = block_means
        .iter()
        .zip(&block_sizes)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect();

    let ctx = EstimatorContext {
        mean_degree: Some(net.graph.mean_degree()),
        num_blocks: Some(k),
        smoothing: cfg.smoothing,
    };
    let m = cfg.replication.samples_per_network;
    let replicates: Vec<Replicate> = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.master_seed, Purpose::Sample, &[index as u64, r as u64]);
            let sample = match draw_sample(&cfg.sampling, &net.graph, &y, &net.labels, &mut rng) {
                Ok(s) => s,
                Err(Error::SamplingFailure { restarts }) => {
                    return Ok(Replicate {
                        restarts,
                        sampled: false,
                        estimates: vec![None; cfg.estimators.len()],
                        smoothing_applied: false,
                        dropped_blocks: false,
                    })
                }
                Err(e) => return Err(e),
            };
            let mut rep = Replicate {
                restarts: sample.restarts,
                sampled: true,
                estimates: Vec::with_capacity(cfg.estimators.len()),
                smoothing_applied: false,
                dropped_blocks: false,
            };
            for &est in &cfg.estimators {
                match estimators::evaluate(est, &sample, &ctx) {
                    Ok(res) => {
                        rep.smoothing_applied |= res.diagnostics.smoothing_applied;
                        rep.dropped_blocks |= !res.diagnostics.dropped_blocks.is_empty();
                        rep.estimates.push(Some(res.value));
                    }
                    Err(_) => rep.estimates.push(None),
                }
            }
            Ok(rep)
        })
        .collect::<Result<_>>()?;

    let rows = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &est)| {
            let values: Vec<f64> = replicates.iter().filter_map(|r| r.estimates[e]).collect();
            let metrics = summarize(&values, mu_true);
            ReportRow {
                network_id: index,
                axis_value,
                estimator: est,
                abs_bias: metrics.map(|m| m.abs_bias),
                sd: metrics.map(|m| m.sd),
                rmse: metrics.map(|m| m.rmse),
                mu_true,
                failures: m - values.len(),
            }
        })
        .collect();

    let meta = NetworkMeta {
        network_id: index,
        axis_value,
        original_node_count: net.original_node_count,
        lcc_size: n,
        block_sizes,
        mean_degree: net.graph.mean_degree(),
        mu_true,
        block_means,
        clamped_pairs: net.clamped_pairs,
        generation_method: net.method,
        total_restarts: replicates.iter().map(|r| r.restarts).sum(),
        sampling_failures: replicates.iter().filter(|r| !r.sampled).count(),
        smoothing_applied: replicates.iter().filter(|r| r.smoothing_applied).count(),
        dropped_block_samples: replicates.iter().filter(|r| r.dropped_blocks).count(),
    };
    Ok((rows, meta))
}

fn run_at(cfg: &ExperimentConfig, axis_value: Option<f64>) -> Result<(Vec<ReportRow>, Vec<NetworkMeta>)> {
    let per_network: Vec<(Vec<ReportRow>, NetworkMeta)> = (0..cfg.replication.networks)
        .into_par_iter()
        .map(|g| run_network(cfg, g, axis_value))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut metas = Vec::new();
    for (r, m) in per_network {
        rows.extend(r);
        metas.push(m);
    }
    Ok((rows, metas))
}

/// Runs the configuration, or its sweep when one is present, on the current
/// rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (rows, networks) = match &cfg.sweep {
        None => run_at(cfg, None)?,
        Some(sweep) => {
            let mut rows = Vec::new();
            let mut networks = Vec::new();
            for &v in &sweep.values {
                let (r, n) = run_at(&cfg.at_axis(sweep.axis, v)?, Some(v))?;
                rows.extend(r);
                networks.extend(n);
            }
            (rows, networks)
        }
    };
    Ok(ExperimentReport {
        master_seed: cfg.master_seed,
        sd_convention: SD_CONVENTION.to_string(),
        config: cfg.clone(),
        rows,
        networks,
    })
}

/// [`run`] over `axis` and `values`, overriding any sweep in the config.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.sweep = Some(SweepSpec {
        axis,
        values: values.to_vec(),
    });
    run(&cfg)
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::arg("thread count must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::arg(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}
