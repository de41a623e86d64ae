//! Population-level block quantities of a DC-SBM and graph-level block
//! transition diagnostics.
//!
//! With `m = 1ᵀB1` and `Q = B/m`, the block chain has transition matrix
//! `Pᴮ_uv = Q_uv / Q_{u*}` and stationary law `πᴮ_k = Q_{k*}`. The expected
//! block mean degree is `d̄_k = B_{k*}/N_k`, so `πᴮ_k / d̄_k ∝ N_k` and the
//! block proportions `α_k = N_k/N` follow from `πᴮ` and `d̄` alone.

use serde::{Deserialize, Serialize};

use crate::dcsbm::{check_square_symmetric_positive, Matrix};
use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationBlockModel {
    /// `m = 1ᵀB1`.
    pub total: f64,
    pub q: Matrix,
    pub p_b: Matrix,
    pub pi_b: Vec<f64>,
    /// `d̄_k = B_{k*}/N_k`.
    pub mean_block_degree: Vec<f64>,
    /// `πᴮ_k/d̄_k` normalized; equals `N_k/N`.
    pub alpha: Vec<f64>,
}

pub fn population_model(b: &Matrix, block_sizes: &[usize]) -> Result<PopulationBlockModel> {
    let k = block_sizes.len();
    if k == 0 {
        return Err(Error::arg("at least one block is required"));
    }
    if block_sizes.contains(&0) {
        return Err(Error::arg("block sizes must be positive"));
    }
    check_square_symmetric_positive(b, k, "B")?;

    let total: f64 = b.iter().flatten().sum();
    let q: Matrix = b
        .iter()
        .map(|row| row.iter().map(|x| x / total).collect())
        .collect();
    let row_sums: Vec<f64> = b.iter().map(|row| row.iter().sum()).collect();
    let p_b = b
        .iter()
        .zip(&row_sums)
        .map(|(row, s)| row.iter().map(|x| x / s).collect())
        .collect();
    let pi_b = row_sums.iter().map(|s| s / total).collect();
    let mean_block_degree: Vec<f64> = row_sums
        .iter()
        .zip(block_sizes)
        .map(|(s, &n)| s / n as f64)
        .collect();
    // πᴮ_k / d̄_k = N_k / m, so the normalization is the same for every block.
    let n: usize = block_sizes.iter().sum();
    let alpha = block_sizes.iter().map(|&s| s as f64 / n as f64).collect();

    Ok(PopulationBlockModel {
        total,
        q,
        p_b,
        pi_b,
        mean_block_degree,
        alpha,
    })
}

impl PopulationBlockModel {
    /// `α` recomputed from `πᴮ/d̄` without using the block sizes directly.
    pub fn alpha_from_equilibrium(&self) -> Vec<f64> {
        let w: Vec<f64> = self
            .pi_b
            .iter()
            .zip(&self.mean_block_degree)
            .map(|(p, d)| p / d)
            .collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }
}

/// Weighted degree of `i` into each block, `d(i; v)`.
pub fn block_degrees(g: &Graph, labels: &BlockAssignment, i: usize) -> Vec<f64> {
    let mut out = vec![0.0; labels.num_blocks()];
    for (&j, &w) in g.neighbors(i).iter().zip(g.neighbor_weights(i)) {
        out[labels.block_of(j)] += w;
    }
    out
}

/// `p_{z(i)v}(i) = d(i; v) / d_i` for every block `v`.
pub fn node_block_transition(g: &Graph, labels: &BlockAssignment, i: usize) -> Result<Vec<f64>> {
    check_labels(g, labels)?;
    let d = g.degree(i)?;
    if d <= 0.0 {
        return Err(Error::DegenerateNode(i));
    }
    Ok(block_degrees(g, labels, i).into_iter().map(|x| x / d).collect())
}

fn check_labels(g: &Graph, labels: &BlockAssignment) -> Result<()> {
    if labels.len() != g.node_count() {
        return Err(Error::arg(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.node_count()
        )));
    }
    Ok(())
}

/// Observed block degree totals `B̂_uv = Σ_{i∈V_u} d(i; v)`, the empirical
/// counterpart of `B` for an observed graph.
pub fn empirical_affinity(g: &Graph, labels: &BlockAssignment) -> Result<Matrix> {
    check_labels(g, labels)?;
    let k = labels.num_blocks();
    let mut b = vec![vec![0.0; k]; k];
    for i in 0..g.node_count() {
        let u = labels.block_of(i);
        for (v, x) in block_degrees(g, labels, i).into_iter().enumerate() {
            b[u][v] += x;
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub node_count: usize,
    /// `max_{i,v} |p_{z(i)v}(i) / Pᴮ_{z(i)v} − 1|` over non-isolated nodes.
    pub max_deviation: f64,
    /// Node and target block where the maximum occurs.
    pub argmax: Option<(usize, usize)>,
    /// `√(log N / N)`.
    pub reference: f64,
    pub ratio: f64,
    pub isolated_nodes: usize,
}

/// Largest relative deviation of node-level block transitions from the
/// population block transition matrix of `b`. Report only; no bound is checked.
pub fn transition_concentration(
    g: &Graph,
    labels: &BlockAssignment,
    b: &Matrix,
) -> Result<ConcentrationReport> {
    check_labels(g, labels)?;
    let pop = population_model(b, &labels.block_sizes())?;
    let n = g.node_count();
    let mut max_deviation: f64 = 0.0;
    let mut argmax = None;
    let mut isolated_nodes = 0;
    for i in 0..n {
        let d = g.degrees()[i];
        if d <= 0.0 {
            isolated_nodes += 1;
            continue;
        }
        let u = labels.block_of(i);
        for (v, x) in block_degrees(g, labels, i).into_iter().enumerate() {
            let dev = (x / d / pop.p_b[u][v] - 1.0).abs();
            if dev > max_deviation || argmax.is_none() {
                max_deviation = dev;
                argmax = Some((i, v));
            }
        }
    }
    let nf = n as f64;
    let reference = if n > 1 { (nf.ln() / nf).sqrt() } else { f64::NAN };
    Ok(ConcentrationReport {
        node_count: n,
        max_deviation,
        argmax,
        reference,
        ratio: max_deviation / reference,
        isolated_nodes,
    })
}
