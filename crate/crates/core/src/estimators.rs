//! Point estimators of the population mean `μ_true = N⁻¹ Σ_i y(i)` from an
//! RDS sample.
//!
//! * `sample_mean`: plain average of `Y_τ`, biased toward high-degree nodes.
//! * `ipw`: `(d̄/n) Σ Y_τ / d_{X_τ}` with the true mean degree supplied.
//! * `vh`: Volz–Heckathorn, the `1/d`-weighted average of `Y_τ`.
//! * `ps`: post-stratified. Blocks are the strata; block proportions come
//!   from the estimated block transition matrix `P̂` via
//!   `π̂_k = [Σ_v P̂_kv / P̂_vk]⁻¹` and `α̂_k ∝ π̂_k / H_k`, and the estimate
//!   is `Σ_k α̂_k μ̂_k` with `μ̂_k` the within-block VH estimate.
//!
//! `π̂` is the closed form above, not an eigensolve. For a `P̂` that is the
//! row normalization of a symmetric matrix the two coincide; in general they
//! differ, and [`equilibrium_eigen`] gives the eigenvector for comparison.

use serde::{Deserialize, Serialize};

use crate::dcsbm::Matrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::RdsSample;

pub const DEFAULT_SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mean,
    Ipw,
    Vh,
    Ps,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::Mean, Estimator::Ipw, Estimator::Vh, Estimator::Ps];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mean => "mean",
            Estimator::Ipw => "ipw",
            Estimator::Vh => "vh",
            Estimator::Ps => "ps",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown estimator {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Blocks seen only as the seed, left out of `π̂`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_blocks: Vec<usize>,
    /// Blocks with no sample at all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unobserved_blocks: Vec<usize>,
    #[serde(default)]
    pub smoothing_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimator: Estimator,
    pub value: f64,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    fn plain(estimator: Estimator, value: f64) -> Self {
        Self {
            estimator,
            value,
            diagnostics: Diagnostics::default(),
        }
    }
}

pub fn sample_mean(s: &RdsSample) -> f64 {
    s.y.iter().sum::<f64>() / s.len() as f64
}

fn check_degrees<'a>(degrees: impl Iterator<Item = &'a f64>) -> Result<()> {
    match degrees.enumerate().find(|(_, d)| !(**d > 0.0)) {
        Some((t, _)) => Err(Error::DegenerateNode(t)),
        None => Ok(()),
    }
}

/// `(Σ 1/d, Σ y/d, count)` over the selected samples.
fn inverse_degree_sums(s: &RdsSample, keep: impl Fn(usize) -> bool) -> (f64, f64, usize) {
    let mut inv = 0.0;
    let mut weighted = 0.0;
    let mut count = 0;
    for t in (0..s.len()).filter(|&t| keep(t)) {
        inv += 1.0 / s.degrees[t];
        weighted += s.y[t] / s.degrees[t];
        count += 1;
    }
    (inv, weighted, count)
}

/// `(H, μ̂)` where `H = (n⁻¹ Σ 1/d)⁻¹` and `μ̂ = (H/n) Σ y/d`.
fn harmonic_and_weighted(inv: f64, weighted: f64, count: usize) -> (f64, f64) {
    let n = count as f64;
    let h = n / inv;
    (h, h / n * weighted)
}

/// `Ĥ = (n⁻¹ Σ 1/d_{X_τ})⁻¹`.
pub fn harmonic_mean_degree(s: &RdsSample) -> Result<f64> {
    check_degrees(s.degrees.iter())?;
    let (inv, _, n) = inverse_degree_sums(s, |_| true);
    Ok(n as f64 / inv)
}

pub fn ipw(s: &RdsSample, mean_degree: f64) -> Result<f64> {
    check_degrees(s.degrees.iter())?;
    if !(mean_degree.is_finite() && mean_degree > 0.0) {
        return Err(Error::arg(format!("mean degree must be positive, got {mean_degree}")));
    }
    let (_, weighted, n) = inverse_degree_sums(s, |_| true);
    Ok(mean_degree / n as f64 * weighted)
}

pub fn vh(s: &RdsSample) -> Result<f64> {
    check_degrees(s.degrees.iter())?;
    let (inv, weighted, n) = inverse_degree_sums(s, |_| true);
    Ok(harmonic_and_weighted(inv, weighted, n).1)
}

fn sample_blocks(s: &RdsSample) -> Result<&[usize]> {
    s.blocks.as_deref().ok_or(Error::MissingLabels)
}

/// Within-block harmonic mean degree `H_k` and VH estimate `μ̂_k`.
pub fn blockwise_vh(s: &RdsSample, k: usize) -> Result<(f64, f64)> {
    let blocks = sample_blocks(s)?;
    check_degrees(s.degrees.iter())?;
    let (inv, weighted, n) = inverse_degree_sums(s, |t| blocks[t] == k);
    if n == 0 {
        return Err(Error::EmptyBlock(k));
    }
    Ok(harmonic_and_weighted(inv, weighted, n))
}

/// Block-level summary of a sample. Entries for blocks outside `included`
/// are zero in `p_hat`, `pi_hat` and `alpha_hat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub num_blocks: usize,
    pub sample_size: usize,
    /// `n_k`, samples per block.
    pub n_k: Vec<usize>,
    /// `n_{k'}`, referrals made by samples in block `k`.
    pub n_origin: Vec<usize>,
    /// `n_{u'v}`, referrals from block `u` into block `v`.
    pub n_referral: Vec<Vec<usize>>,
    /// `Q̂ = n_{u'v} / n`.
    pub q_hat: Matrix,
    pub p_hat: Matrix,
    pub pi_hat: Vec<f64>,
    pub h_delta: Vec<Option<f64>>,
    pub mu_hat: Vec<Option<f64>>,
    pub alpha_hat: Vec<f64>,
    /// `n_k > 0`.
    pub observed: Vec<bool>,
    /// Observed blocks used for `P̂`, `π̂` and `α̂`.
    pub included: Vec<bool>,
    pub smoothing_applied: bool,
}

impl BlockSummary {
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            dropped_blocks: (0..self.num_blocks)
                .filter(|&k| self.observed[k] && !self.included[k])
                .collect(),
            unobserved_blocks: (0..self.num_blocks).filter(|&k| !self.observed[k]).collect(),
            smoothing_applied: self.smoothing_applied,
        }
    }
}

/// Fills the counts and `Q̂`. The seed counts toward `n_k` but makes no referral.
pub fn block_counts(s: &RdsSample, num_blocks: usize) -> Result<BlockSummary> {
    let blocks = sample_blocks(s)?;
    if num_blocks == 0 {
        return Err(Error::arg("block count must be at least 1"));
    }
    if let Some(&b) = blocks.iter().find(|&&b| b >= num_blocks) {
        return Err(Error::arg(format!("block {b} out of range for K = {num_blocks}")));
    }
    let k = num_blocks;
    let n = s.len();
    let mut n_k = vec![0; k];
    for &b in blocks {
        n_k[b] += 1;
    }
    let mut n_origin = vec![0; k];
    let mut n_referral = vec![vec![0; k]; k];
    for (p, t) in s.tree.referrals() {
        n_origin[blocks[p]] += 1;
        n_referral[blocks[p]][blocks[t]] += 1;
    }
    let q_hat = n_referral
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / n as f64).collect())
        .collect();
    let observed: Vec<bool> = n_k.iter().map(|&c| c > 0).collect();
    Ok(BlockSummary {
        num_blocks: k,
        sample_size: n,
        n_k,
        n_origin,
        n_referral,
        q_hat,
        p_hat: vec![vec![0.0; k]; k],
        pi_hat: vec![0.0; k],
        h_delta: vec![None; k],
        mu_hat: vec![None; k],
        alpha_hat: vec![0.0; k],
        included: observed.clone(),
        observed,
        smoothing_applied: false,
    })
}

/// Estimates `P̂` over the observed blocks, leaving out blocks that no
/// referral ever lands in (they can only hold the seed). When some needed
/// count is zero and `smoothing > 0`, adds `smoothing` to every retained
/// count before normalizing.
pub fn block_transition(bs: &mut BlockSummary, smoothing: f64) -> Result<()> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::arg(format!("smoothing must be non-negative, got {smoothing}")));
    }
    let k = bs.num_blocks;
    let inbound: Vec<usize> = (0..k)
        .map(|v| (0..k).map(|u| bs.n_referral[u][v]).sum())
        .collect();
    bs.included = (0..k).map(|b| bs.observed[b] && inbound[b] > 0).collect();
    let idx: Vec<usize> = (0..k).filter(|&b| bs.included[b]).collect();
    if idx.is_empty() {
        return Err(Error::arg("sample has no referrals"));
    }

    let needs_smoothing = idx
        .iter()
        .any(|&u| idx.iter().any(|&v| bs.n_referral[u][v] == 0));
    let add = if needs_smoothing && smoothing > 0.0 {
        bs.smoothing_applied = true;
        smoothing
    } else {
        bs.smoothing_applied = false;
        0.0
    };

    let mut p_hat = vec![vec![0.0; k]; k];
    for &u in &idx {
        let row: Vec<f64> = idx
            .iter()
            .map(|&v| bs.n_referral[u][v] as f64 + add)
            .collect();
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::UndefinedTransition(u));
        }
        for (&v, c) in idx.iter().zip(row) {
            p_hat[u][v] = c / total;
        }
    }
    bs.p_hat = p_hat;
    Ok(())
}

/// `π̂_k = [Σ_{v∈included} P̂_kv / P̂_vk]⁻¹` for included `k`, zero elsewhere.
/// Not renormalized.
pub fn pi_hat(p_hat: &Matrix, included: &[bool]) -> Result<Vec<f64>> {
    let k = p_hat.len();
    let idx: Vec<usize> = (0..k).filter(|&b| included[b]).collect();
    let mut pi = vec![0.0; k];
    for &a in &idx {
        let mut acc = 0.0;
        for &v in &idx {
            let back = p_hat[v][a];
            if back <= 0.0 {
                return Err(Error::UndefinedPi { from: v, to: a });
            }
            acc += p_hat[a][v] / back;
        }
        pi[a] = 1.0 / acc;
    }
    Ok(pi)
}

/// Stationary distribution of `P̂` restricted to the included blocks, by
/// linear solve. Diagnostic counterpart of [`pi_hat`].
pub fn equilibrium_eigen(p_hat: &Matrix, included: &[bool]) -> Result<Vec<f64>> {
    let idx: Vec<usize> = (0..p_hat.len()).filter(|&b| included[b]).collect();
    let sub: Matrix = idx
        .iter()
        .map(|&u| idx.iter().map(|&v| p_hat[u][v]).collect())
        .collect();
    let x = linalg::stationary_left(&sub)
        .ok_or_else(|| Error::arg("block chain has no unique equilibrium"))?;
    let mut out = vec![0.0; p_hat.len()];
    for (&b, v) in idx.iter().zip(x) {
        out[b] = v;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsEstimate {
    pub estimate: EstimateResult,
    pub summary: BlockSummary,
}

/// Post-stratified estimate `Σ_k α̂_k μ̂_k` over the included blocks.
pub fn ps(s: &RdsSample, num_blocks: usize, smoothing: f64) -> Result<PsEstimate> {
    if s.len() < 2 {
        return Err(Error::arg("post-stratification needs at least two samples"));
    }
    check_degrees(s.degrees.iter())?;
    let mut bs = block_counts(s, num_blocks)?;
    block_transition(&mut bs, smoothing)?;
    bs.pi_hat = pi_hat(&bs.p_hat, &bs.included)?;

    for k in 0..num_blocks {
        if bs.observed[k] {
            let (h, mu) = blockwise_vh(s, k)?;
            bs.h_delta[k] = Some(h);
            bs.mu_hat[k] = Some(mu);
        }
    }

    let weights: Vec<f64> = (0..num_blocks)
        .map(|k| match (bs.included[k], bs.h_delta[k]) {
            (true, Some(h)) => bs.pi_hat[k] / h,
            _ => 0.0,
        })
        .collect();
    let total: f64 = weights.iter().sum();
    bs.alpha_hat = weights.iter().map(|w| w / total).collect();
    let value = (0..num_blocks)
        .filter(|&k| bs.included[k])
        .map(|k| bs.alpha_hat[k] * bs.mu_hat[k].expect("included blocks are observed"))
        .sum();

    Ok(PsEstimate {
        estimate: EstimateResult {
            estimator: Estimator::Ps,
            value,
            diagnostics: bs.diagnostics(),
        },
        summary: bs,
    })
}

/// Inputs some estimators need beyond the sample itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorContext {
    /// True `d̄`, required by IPW.
    pub mean_degree: Option<f64>,
    /// `K`; falls back to the sample's own block count.
    pub num_blocks: Option<usize>,
    pub smoothing: f64,
}

impl Default for EstimatorContext {
    fn default() -> Self {
        Self {
            mean_degree: None,
            num_blocks: None,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

pub fn evaluate(est: Estimator, s: &RdsSample, ctx: &EstimatorContext) -> Result<EstimateResult> {
    Ok(match est {
        Estimator::Mean => EstimateResult::plain(est, sample_mean(s)),
        Estimator::Vh => EstimateResult::plain(est, vh(s)?),
        Estimator::Ipw => {
            let d = ctx
                .mean_degree
                .ok_or_else(|| Error::arg("IPW needs the population mean degree"))?;
            EstimateResult::plain(est, ipw(s, d)?)
        }
        Estimator::Ps => {
            let k = ctx
                .num_blocks
                .or(s.num_blocks)
                .ok_or(Error::MissingLabels)?;
            ps(s, k, ctx.smoothing)?.estimate
        }
    })
}
