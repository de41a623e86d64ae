//! Exact computations on tiny instances.
//!
//! [`enumerate_walks`] lists every positive-probability assignment of nodes
//! to tree positions under the with-replacement tree walk, and
//! [`exact_moments`] integrates an arbitrary estimator callback against it.
//! The tree-chain functions cover the ±1 two-state chain on a referral tree
//! where each child flips its parent's sign with probability `p`.

use serde::{Deserialize, Serialize};

use crate::dcsbm::Matrix;
use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph};
use crate::sampling::{RdsSample, SamplingTree};

pub const WALK_GUARD: f64 = 1e6;
pub const TREE_CHAIN_MAX_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkDistribution {
    /// `(x_0, …, x_{n-1})` with its probability; zero-probability
    /// assignments are omitted.
    pub outcomes: Vec<(Vec<usize>, f64)>,
}

impl WalkDistribution {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    /// Exact law of `X_τ`.
    pub fn marginal(&self, tau: usize, node_count: usize) -> Vec<f64> {
        let mut m = vec![0.0; node_count];
        for (x, p) in &self.outcomes {
            m[x[tau]] += p;
        }
        m
    }
}

/// Probability of an assignment is `seed(x_0) Π_{τ≥1} P_{x_τ' x_τ}`.
pub fn enumerate_walks(g: &Graph, tree: &SamplingTree, seed_dist: &[f64]) -> Result<WalkDistribution> {
    let n_nodes = g.node_count();
    if seed_dist.len() != n_nodes {
        return Err(Error::arg(format!(
            "seed distribution has {} entries for {n_nodes} nodes",
            seed_dist.len()
        )));
    }
    let size = (n_nodes as f64).powi(tree.len() as i32);
    if size > WALK_GUARD {
        return Err(Error::SizeGuard {
            size,
            guard: WALK_GUARD,
        });
    }
    g.require_walkable()?;

    let mut outcomes = Vec::new();
    let mut x = vec![0; tree.len()];
    for (s, &ps) in seed_dist.iter().enumerate() {
        if ps > 0.0 {
            x[0] = s;
            extend(g, tree, 1, ps, &mut x, &mut outcomes)?;
        }
    }
    Ok(WalkDistribution { outcomes })
}

fn extend(
    g: &Graph,
    tree: &SamplingTree,
    tau: usize,
    prob: f64,
    x: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, f64)>,
) -> Result<()> {
    if tau == tree.len() {
        out.push((x.clone(), prob));
        return Ok(());
    }
    let parent = x[tree.parent(tau).expect("non-root")];
    for &j in g.neighbors(parent) {
        x[tau] = j;
        extend(g, tree, tau + 1, prob * g.transition_prob(parent, j)?, x, out)?;
    }
    Ok(())
}

/// Exact mean and variance of `estimator` over the with-replacement tree
/// walk. Samples passed to the callback carry node ids, `y`, degrees and,
/// when given, block labels.
pub fn exact_moments<F>(
    g: &Graph,
    tree: &SamplingTree,
    y: &[f64],
    labels: Option<&BlockAssignment>,
    seed_dist: &[f64],
    estimator: F,
) -> Result<(f64, f64)>
where
    F: Fn(&RdsSample) -> Result<f64>,
{
    if y.len() != g.node_count() {
        return Err(Error::arg("outcome length does not match node count"));
    }
    let dist = enumerate_walks(g, tree, seed_dist)?;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (x, p) in &dist.outcomes {
        let s = RdsSample {
            tree: tree.clone(),
            nodes: x.clone(),
            y: x.iter().map(|&i| y[i]).collect(),
            degrees: x.iter().map(|&i| g.degrees()[i]).collect(),
            blocks: labels.map(|l| x.iter().map(|&i| l.block_of(i)).collect()),
            num_blocks: labels.map(|l| l.num_blocks()),
            with_replacement: true,
            restarts: 0,
        };
        let v = estimator(&s)?;
        mean += p * v;
        second += p * v * v;
    }
    Ok((mean, (second - mean * mean).max(0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeChainMoments {
    /// `Cov(g_a, g_b) = θ^{dist(a, b)}` with `θ = 1 − 2p`.
    pub covariance: Matrix,
    pub leaf_average_variance: f64,
    pub node_average_variance: f64,
}

fn check_flip(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::arg(format!("flip probability must lie in (0, 1/2), got {p}")));
    }
    Ok(())
}

fn average_variance(cov: &Matrix, members: &[usize]) -> f64 {
    let k = members.len() as f64;
    let total: f64 = members
        .iter()
        .map(|&a| members.iter().map(|&b| cov[a][b]).sum::<f64>())
        .sum();
    total / (k * k)
}

fn moments_from_covariance(covariance: Matrix, tree: &SamplingTree) -> TreeChainMoments {
    let all: Vec<usize> = (0..tree.len()).collect();
    TreeChainMoments {
        leaf_average_variance: average_variance(&covariance, &tree.leaves()),
        node_average_variance: average_variance(&covariance, &all),
        covariance,
    }
}

/// Covariances from tree distances, started from the symmetric stationary law.
pub fn tree_chain_moments(p: f64, tree: &SamplingTree) -> Result<TreeChainMoments> {
    check_flip(p)?;
    let theta = 1.0 - 2.0 * p;
    let depths = tree.depths();
    let n = tree.len();
    let cov = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| theta.powi(tree.distance(a, b, &depths) as i32))
                .collect()
        })
        .collect();
    Ok(moments_from_covariance(cov, tree))
}

/// Same quantities by summing over all `2^n` sign configurations.
pub fn tree_chain_exhaustive(p: f64, tree: &SamplingTree) -> Result<TreeChainMoments> {
    check_flip(p)?;
    let n = tree.len();
    if n > TREE_CHAIN_MAX_NODES {
        return Err(Error::SizeGuard {
            size: 2f64.powi(n as i32),
            guard: 2f64.powi(TREE_CHAIN_MAX_NODES as i32),
        });
    }
    let mut cov = vec![vec![0.0; n]; n];
    let mut sign = vec![0.0; n];
    for mask in 0u32..(1u32 << n) {
        let mut prob = 0.5;
        for (t, s) in sign.iter_mut().enumerate() {
            *s = if mask >> t & 1 == 1 { 1.0 } else { -1.0 };
        }
        for t in 1..n {
            let parent = tree.parent(t).expect("non-root");
            prob *= if sign[t] == sign[parent] { 1.0 - p } else { p };
        }
        for a in 0..n {
            let pa = prob * sign[a];
            for b in 0..n {
                cov[a][b] += pa * sign[b];
            }
        }
    }
    Ok(moments_from_covariance(cov, tree))
}

/// `ζ(p) = log₂(2(1 − 2p)²)`.
pub fn zeta(p: f64) -> f64 {
    (2.0 * (1.0 - 2.0 * p).powi(2)).log2()
}

/// Predicted VH log-variance slope `−(1 − ζ)` on complete binary trees.
pub fn predicted_vh_slope(p: f64) -> f64 {
    -(1.0 - zeta(p))
}

/// Checks `2(1 − 2p)² > 1` and returns `ζ(p)`.
pub fn check_scaling_precondition(p: f64) -> Result<f64> {
    check_flip(p)?;
    let value = 2.0 * (1.0 - 2.0 * p).powi(2);
    if value <= 1.0 {
        return Err(Error::ScalingPrecondition { p, value });
    }
    Ok(zeta(p))
}
