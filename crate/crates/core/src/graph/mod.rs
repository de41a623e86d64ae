//! Weighted undirected graphs with self-loops.
//!
//! Degrees follow the convention that a self-loop `{i, i}` of weight `w`
//! contributes `w` to `d_i` exactly once (many graph libraries count it
//! twice). Transition probabilities are `P_ij = w_ij / d_i`, so a walk at a
//! node with a self-loop stays put with probability `w_ii / d_i`.
//!
//! Graphs are immutable once built; use [`GraphBuilder`] to construct one.

mod components;
mod io;

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};

pub use components::{largest_connected_component, LargestComponent, UnionFind};
pub use io::{load_edge_list, load_labels, load_values, write_edge_list, write_labels};

/// Compressed adjacency storage. Each row lists neighbors in increasing id
/// order; a self-loop appears once in its own row.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    /// Inclusive per-row prefix sums of `weights`, used for weighted steps.
    cumulative: Vec<f64>,
    degrees: Vec<f64>,
    /// Inclusive prefix sums of `degrees`, used for degree-proportional draws.
    degree_prefix: Vec<f64>,
    unweighted: bool,
    components: usize,
}

#[derive(Debug, Clone)]
pub struct GraphBuilder {
    node_count: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl GraphBuilder {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
        }
    }

    pub fn with_capacity(node_count: usize, edges: usize) -> Self {
        Self {
            node_count,
            edges: Vec::with_capacity(edges),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) -> Result<&mut Self> {
        if i >= self.node_count || j >= self.node_count {
            return Err(Error::arg(format!(
                "edge {{{i}, {j}}} out of range for {} nodes",
                self.node_count
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::arg(format!(
                "edge {{{i}, {j}}} has non-positive weight {weight}"
            )));
        }
        self.edges.push((i.min(j), i.max(j), weight));
        Ok(self)
    }

    /// Adds an edge the caller guarantees to be in range, positive and new.
    pub(crate) fn push_unchecked(&mut self, i: usize, j: usize, weight: f64) {
        self.edges.push((i.min(j), i.max(j), weight));
    }

    pub fn build(self) -> Result<Graph> {
        let mut seen = HashSet::with_capacity(self.edges.len());
        for &(i, j, _) in &self.edges {
            if !seen.insert((i, j)) {
                return Err(Error::arg(format!("duplicate edge {{{i}, {j}}}")));
            }
        }
        Ok(self.build_unchecked())
    }

    /// Builds without the duplicate check. Duplicates would silently create
    /// parallel entries, so only generators that emit distinct pairs use this.
    pub(crate) fn build_unchecked(self) -> Graph {
        let n = self.node_count;
        let mut counts = vec![0usize; n];
        for &(i, j, _) in &self.edges {
            counts[i] += 1;
            if i != j {
                counts[j] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let total = offsets[n];
        let mut fill = offsets[..n].to_vec();
        let mut slots = vec![(0usize, 0.0f64); total];
        for &(i, j, w) in &self.edges {
            slots[fill[i]] = (j, w);
            fill[i] += 1;
            if i != j {
                slots[fill[j]] = (i, w);
                fill[j] += 1;
            }
        }
        for v in 0..n {
            slots[offsets[v]..offsets[v + 1]].sort_unstable_by_key(|&(t, _)| t);
        }

        let targets: Vec<usize> = slots.iter().map(|&(t, _)| t).collect();
        let weights: Vec<f64> = slots.iter().map(|&(_, w)| w).collect();
        let unweighted = weights.iter().all(|&w| w == 1.0);

        let mut cumulative = Vec::with_capacity(total);
        let mut degrees = Vec::with_capacity(n);
        for v in 0..n {
            let mut acc = 0.0;
            for &w in &weights[offsets[v]..offsets[v + 1]] {
                acc += w;
                cumulative.push(acc);
            }
            degrees.push(acc);
        }
        let mut degree_prefix = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &d in &degrees {
            acc += d;
            degree_prefix.push(acc);
        }

        let mut uf = UnionFind::new(n);
        for &(i, j, _) in &self.edges {
            uf.union(i, j);
        }
        let components = uf.set_count();

        Graph {
            offsets,
            targets,
            weights,
            cumulative,
            degrees,
            degree_prefix,
            unweighted,
            components,
        }
    }
}

impl Graph {
    /// Builds an unweighted graph from a list of pairs.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut b = GraphBuilder::with_capacity(node_count, edges.len());
        for &(i, j) in edges {
            b.add_edge(i, j, 1.0)?;
        }
        b.build()
    }

    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Number of stored undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn is_unweighted(&self) -> bool {
        self.unweighted
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components <= 1
    }

    pub fn has_isolated_nodes(&self) -> bool {
        self.degrees.iter().any(|&d| d <= 0.0)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.node_count() {
            return Err(Error::arg(format!(
                "node {i} out of range for {} nodes",
                self.node_count()
            )));
        }
        Ok(())
    }

    pub fn degree(&self, i: usize) -> Result<f64> {
        self.check_node(i)?;
        Ok(self.degrees[i])
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn total_degree(&self) -> f64 {
        self.degree_prefix.last().copied().unwrap_or(0.0)
    }

    /// `d̄ = Σ d_i / N`.
    pub fn mean_degree(&self) -> f64 {
        if self.node_count() == 0 {
            return 0.0;
        }
        self.total_degree() / self.node_count() as f64
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn neighbor_weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weight(&self, i: usize, j: usize) -> Result<f64> {
        self.check_node(i)?;
        self.check_node(j)?;
        Ok(match self.neighbors(i).binary_search(&j) {
            Ok(pos) => self.neighbor_weights(i)[pos],
            Err(_) => 0.0,
        })
    }

    /// Iterates each undirected edge once as `(i, j, w)` with `i <= j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .zip(self.neighbor_weights(i))
                .filter(move |(&j, _)| j >= i)
                .map(move |(&j, &w)| (i, j, w))
        })
    }

    pub fn transition_prob(&self, i: usize, j: usize) -> Result<f64> {
        let w = self.weight(i, j)?;
        let d = self.degrees[i];
        if d <= 0.0 {
            return Err(Error::DegenerateNode(i));
        }
        Ok(w / d)
    }

    /// `π_i = d_i / Σ_j d_j`.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        self.require_walkable()?;
        let total = self.total_degree();
        Ok(self.degrees.iter().map(|&d| d / total).collect())
    }

    /// Checks the preconditions for running a walk: connected, no isolated nodes.
    pub fn require_walkable(&self) -> Result<()> {
        if let Some(i) = self.degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::DegenerateNode(i));
        }
        if !self.is_connected() {
            return Err(Error::Disconnected {
                components: self.components,
            });
        }
        Ok(())
    }

    /// Draws a neighbor of `i` with probability `P_ij`. `i` must have positive degree.
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        debug_assert!(hi > lo, "step from isolated node {i}");
        if self.unweighted {
            return self.targets[lo + rng.random_range(0..hi - lo)];
        }
        let row = &self.cumulative[lo..hi];
        let u = rng.random::<f64>() * self.degrees[i];
        let pos = row.partition_point(|&c| c <= u).min(row.len() - 1);
        self.targets[lo + pos]
    }

    /// Draws a node with probability proportional to its degree.
    pub fn sample_by_degree<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total_degree();
        self.degree_prefix
            .partition_point(|&c| c <= u)
            .min(self.node_count() - 1)
    }
}

/// Block labels `z(i)` for every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAssignment {
    labels: Vec<usize>,
    num_blocks: usize,
}

impl BlockAssignment {
    pub fn new(labels: Vec<usize>, num_blocks: usize) -> Result<Self> {
        if num_blocks == 0 {
            return Err(Error::arg("block count must be at least 1"));
        }
        if let Some((i, &k)) = labels.iter().enumerate().find(|(_, &k)| k >= num_blocks) {
            return Err(Error::arg(format!(
                "node {i} has label {k}, expected < {num_blocks}"
            )));
        }
        Ok(Self { labels, num_blocks })
    }

    /// Nodes `0..N_0` in block 0, the next `N_1` in block 1, and so on.
    pub fn contiguous(block_sizes: &[usize]) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::arg("at least one block is required"));
        }
        let labels = block_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        Self::new(labels, block_sizes.len())
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks];
        for &k in &self.labels {
            sizes[k] += 1;
        }
        sizes
    }

    pub fn members(&self, k: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &z)| z == k)
            .map(|(i, _)| i)
            .collect()
    }

    /// Keeps labels for `new_to_old[i]` in order; the block count is unchanged.
    pub fn restrict(&self, new_to_old: &[usize]) -> Self {
        Self {
            labels: new_to_old.iter().map(|&o| self.labels[o]).collect(),
            num_blocks: self.num_blocks,
        }
    }
}
