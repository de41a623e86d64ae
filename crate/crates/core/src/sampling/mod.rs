//! Tree-indexed referral sampling.
//!
//! With replacement, every child `τ` of `τ'` independently draws `X_τ` from
//! row `X_τ'` of the walk kernel, so nodes may repeat. Without replacement,
//! each participant draws `R ~ Poisson(λ)` coupons and recruits up to `R`
//! not-yet-recruited neighbors, weight-proportionally and without
//! replacement; a run that dies out before the target size restarts from a
//! freshly drawn seed.

mod tree;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph};

pub use tree::{Extinct, SamplingTree};
pub(crate) use tree::poisson_law;

pub const DEFAULT_MAX_RESTARTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    #[default]
    DegreeProportional,
    Uniform,
    Fixed(usize),
    /// `π_i ∝ d_i`; identical to `DegreeProportional` for any weights.
    Stationary,
}

pub fn select_seed<R: Rng + ?Sized>(policy: SeedPolicy, g: &Graph, rng: &mut R) -> Result<usize> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::arg("graph has no nodes"));
    }
    match policy {
        SeedPolicy::DegreeProportional | SeedPolicy::Stationary => {
            if g.total_degree() <= 0.0 {
                return Err(Error::arg("graph has no edges"));
            }
            Ok(g.sample_by_degree(rng))
        }
        SeedPolicy::Uniform => Ok(rng.random_range(0..n)),
        SeedPolicy::Fixed(id) if id < n => Ok(id),
        SeedPolicy::Fixed(id) => Err(Error::arg(format!(
            "fixed seed {id} out of range for {n} nodes"
        ))),
    }
}

/// An RDS sample: referral tree plus per-sample node, outcome, degree and block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdsSample {
    pub tree: SamplingTree,
    pub nodes: Vec<usize>,
    pub y: Vec<f64>,
    pub degrees: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_blocks: Option<usize>,
    pub with_replacement: bool,
    #[serde(default)]
    pub restarts: usize,
}

impl RdsSample {
    /// Assembles a sample from observed data. Node ids default to `0..n`.
    pub fn from_observations(
        tree: SamplingTree,
        y: Vec<f64>,
        degrees: Vec<f64>,
        blocks: Option<(Vec<usize>, usize)>,
    ) -> Result<Self> {
        let (blocks, num_blocks) = match blocks {
            Some((b, k)) => (Some(b), Some(k)),
            None => (None, None),
        };
        let s = Self {
            nodes: (0..tree.len()).collect(),
            tree,
            y,
            degrees,
            blocks,
            num_blocks,
            with_replacement: true,
            restarts: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tree.len();
        if self.nodes.len() != n || self.y.len() != n || self.degrees.len() != n {
            return Err(Error::arg("sample arrays must match the tree size"));
        }
        if let Some(t) = self.degrees.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::DegenerateNode(self.nodes[t]));
        }
        if let Some(t) = self.y.iter().position(|y| !y.is_finite()) {
            return Err(Error::arg(format!("sample {t} has non-finite outcome")));
        }
        if let Some(blocks) = &self.blocks {
            if blocks.len() != n {
                return Err(Error::arg("block array must match the tree size"));
            }
            let k = self
                .num_blocks
                .ok_or_else(|| Error::arg("blocks given without num_blocks"))?;
            if let Some(&b) = blocks.iter().find(|&&b| b >= k) {
                return Err(Error::arg(format!("block {b} out of range for K = {k}")));
            }
        }
        if !self.with_replacement {
            let mut seen = std::collections::HashSet::new();
            if !self.nodes.iter().all(|x| seen.insert(*x)) {
                return Err(Error::arg("without-replacement sample repeats a node"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "RDS sample".into(),
            source,
        })?;
        s.validate()?;
        Ok(s)
    }

    fn assemble(
        tree: SamplingTree,
        nodes: Vec<usize>,
        g: &Graph,
        y: &[f64],
        labels: Option<&BlockAssignment>,
        with_replacement: bool,
        restarts: usize,
    ) -> Self {
        Self {
            y: nodes.iter().map(|&x| y[x]).collect(),
            degrees: nodes.iter().map(|&x| g.degrees()[x]).collect(),
            blocks: labels.map(|l| nodes.iter().map(|&x| l.block_of(x)).collect()),
            num_blocks: labels.map(BlockAssignment::num_blocks),
            tree,
            nodes,
            with_replacement,
            restarts,
        }
    }
}

fn check_inputs(g: &Graph, y: &[f64], labels: Option<&BlockAssignment>) -> Result<()> {
    g.require_walkable()?;
    if y.len() != g.node_count() {
        return Err(Error::arg(format!(
            "outcome has {} entries for {} nodes",
            y.len(),
            g.node_count()
        )));
    }
    if let Some(l) = labels {
        if l.len() != g.node_count() {
            return Err(Error::arg("labels do not cover the graph"));
        }
    }
    Ok(())
}

/// `(T, P)`-walk: the seed comes from `seed`, every referral follows `P`.
pub fn sample_with_replacement<R: Rng + ?Sized>(
    g: &Graph,
    tree: &SamplingTree,
    seed: SeedPolicy,
    y: &[f64],
    labels: Option<&BlockAssignment>,
    rng: &mut R,
) -> Result<RdsSample> {
    check_inputs(g, y, labels)?;
    let mut nodes = Vec::with_capacity(tree.len());
    nodes.push(select_seed(seed, g, rng)?);
    for (p, _) in tree.referrals() {
        let x = g.step(nodes[p], rng);
        nodes.push(x);
    }
    Ok(RdsSample::assemble(
        tree.clone(),
        nodes,
        g,
        y,
        labels,
        true,
        0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecruitmentSpec {
    pub lambda: f64,
    pub n_target: usize,
    pub max_restarts: usize,
}

/// Link-tracing recruitment without replacement; see the module docs.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    g: &Graph,
    seed: SeedPolicy,
    spec: RecruitmentSpec,
    y: &[f64],
    labels: Option<&BlockAssignment>,
    rng: &mut R,
) -> Result<RdsSample> {
    check_inputs(g, y, labels)?;
    let offspring = poisson_law(spec.lambda)?;
    let n_target = spec.n_target;
    if n_target == 0 || n_target > g.node_count() {
        return Err(Error::arg(format!(
            "target size {n_target} must lie in 1..={}",
            g.node_count()
        )));
    }

    let mut recruited = vec![false; g.node_count()];
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    let mut restarts = 0;
    loop {
        let seed_node = select_seed(seed, g, rng)?;
        let mut nodes = vec![seed_node];
        let mut parents = Vec::with_capacity(n_target.saturating_sub(1));
        recruited[seed_node] = true;
        let mut next = 0;
        while nodes.len() < n_target && next < nodes.len() {
            let coupons = offspring.sample(rng) as usize;
            let room = n_target - nodes.len();
            if coupons > 0 {
                let cur = nodes[next];
                candidates.clear();
                candidates.extend(
                    g.neighbors(cur)
                        .iter()
                        .zip(g.neighbor_weights(cur))
                        .filter(|(&j, _)| !recruited[j])
                        .map(|(&j, &w)| (j, w)),
                );
                let take = coupons.min(candidates.len()).min(room);
                for x in draw_without_replacement(&mut candidates, take, g.is_unweighted(), rng) {
                    recruited[x] = true;
                    nodes.push(x);
                    parents.push(next);
                }
            }
            next += 1;
        }
        for &x in &nodes {
            recruited[x] = false;
        }
        if nodes.len() == n_target {
            let tree = SamplingTree::from_parents(parents).expect("recruitment is breadth-first");
            return Ok(RdsSample::assemble(
                tree, nodes, g, y, labels, false, restarts,
            ));
        }
        restarts += 1;
        if restarts > spec.max_restarts {
            return Err(Error::SamplingFailure {
                restarts: spec.max_restarts,
            });
        }
    }
}

/// Picks `take` distinct candidates. Unweighted: uniform partial shuffle.
/// Weighted: successive draws proportional to the remaining weights.
fn draw_without_replacement<R: Rng + ?Sized>(
    candidates: &mut [(usize, f64)],
    take: usize,
    unweighted: bool,
    rng: &mut R,
) -> Vec<usize> {
    let len = candidates.len();
    let mut out = Vec::with_capacity(take);
    if unweighted {
        for i in 0..take {
            let j = rng.random_range(i..len);
            candidates.swap(i, j);
            out.push(candidates[i].0);
        }
        return out;
    }
    let mut remaining: f64 = candidates.iter().map(|c| c.1).sum();
    for i in 0..take {
        let u = rng.random::<f64>() * remaining;
        let mut acc = 0.0;
        let mut pick = len - 1;
        for (j, c) in candidates.iter().enumerate().skip(i) {
            acc += c.1;
            if u < acc {
                pick = j;
                break;
            }
        }
        candidates.swap(i, pick);
        remaining -= candidates[i].1;
        out.push(candidates[i].0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> Graph {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn spec(lambda: f64, n_target: usize) -> RecruitmentSpec {
        RecruitmentSpec {
            lambda,
            n_target,
            max_restarts: DEFAULT_MAX_RESTARTS,
        }
    }

    #[test]
    fn two_node_walk_alternates() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_with_replacement(
            &g,
            &SamplingTree::path(6),
            SeedPolicy::Fixed(1),
            &[0.0, 1.0],
            None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.nodes, vec![1, 0, 1, 0, 1, 0]);
        assert_eq!(s.y, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn seed_policies() {
        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = 20_000;
        let hits = (0..m)
            .filter(|_| select_seed(SeedPolicy::DegreeProportional, &star, &mut rng).unwrap() == 0)
            .count() as f64;
        let sigma = (0.25 / m as f64).sqrt();
        assert!((hits / m as f64 - 0.5).abs() < 3.0 * sigma);

        let big = complete(8);
        assert_eq!(select_seed(SeedPolicy::Fixed(7), &big, &mut rng).unwrap(), 7);
        assert!(select_seed(SeedPolicy::Fixed(8), &big, &mut rng).is_err());
    }

    #[test]
    fn without_replacement_on_complete_graph() {
        let g = complete(5);
        let y = vec![0.0; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = sample_without_replacement(
                &g,
                SeedPolicy::Uniform,
                spec(2.0, 5),
                &y,
                None,
                &mut rng,
            )
            .unwrap();
            let mut nodes = s.nodes.clone();
            nodes.sort();
            assert_eq!(nodes, vec![0, 1, 2, 3, 4]);
            for (p, t) in s.tree.referrals() {
                assert_ne!(s.nodes[p], s.nodes[t]);
            }
        }
        let s = sample_without_replacement(&g, SeedPolicy::Fixed(3), spec(2.0, 1), &y, None, &mut rng)
            .unwrap();
        assert_eq!(s.nodes, vec![3]);
    }

    #[test]
    fn neighbor_exhaustion_on_path() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sample_without_replacement(
            &g,
            SeedPolicy::Fixed(1),
            spec(1e6, 3),
            &[0.0; 3],
            None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(s.nodes[0], 1);
        let mut rest = s.nodes[1..].to_vec();
        rest.sort();
        assert_eq!(rest, vec![0, 2]);
        assert_eq!(s.tree.max_out_degree(), 2);
        assert_eq!(s.restarts, 0);
    }

    #[test]
    fn restarts_exhausted() {
        // The only way to reach 3 nodes from a leaf of a path is through the
        // center, and a tiny lambda almost never issues coupons.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = sample_without_replacement(
            &g,
            SeedPolicy::Uniform,
            RecruitmentSpec {
                lambda: 1e-9,
                n_target: 3,
                max_restarts: 5,
            },
            &[0.0; 3],
            None,
            &mut rng,
        );
        assert!(matches!(r, Err(Error::SamplingFailure { restarts: 5 })));
        assert!(sample_without_replacement(
            &g,
            SeedPolicy::Uniform,
            spec(2.0, 4),
            &[0.0; 3],
            None,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn weighted_recruitment_prefers_heavy_edges() {
        let mut b = GraphBuilder::new(3);
        b.add_edge(0, 1, 9.0).unwrap();
        b.add_edge(0, 2, 1.0).unwrap();
        let g = b.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = 20_000;
        let mut heavy = 0;
        for _ in 0..m {
            let mut c = vec![(1, 9.0), (2, 1.0)];
            if draw_without_replacement(&mut c, 1, false, &mut rng)[0] == 1 {
                heavy += 1;
            }
        }
        let sigma = (0.09 / m as f64).sqrt();
        assert!((heavy as f64 / m as f64 - 0.9).abs() < 4.0 * sigma);
        let mut c = vec![(1, 9.0), (2, 1.0)];
        let mut both = draw_without_replacement(&mut c, 2, false, &mut rng);
        both.sort();
        assert_eq!(both, vec![1, 2]);
        assert!(g.neighbors(0).len() == 2);
    }

    #[test]
    fn rejects_bad_graphs() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = sample_with_replacement(&g, &SamplingTree::path(2), SeedPolicy::Uniform, &[0.0; 4], None, &mut rng);
        assert!(matches!(r, Err(Error::Disconnected { .. })));
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let r = sample_with_replacement(&g, &SamplingTree::path(2), SeedPolicy::Uniform, &[0.0; 3], None, &mut rng);
        assert!(matches!(r, Err(Error::DegenerateNode(2))));
    }

    #[test]
    fn sample_json_round_trip() {
        let g = complete(6);
        let labels = BlockAssignment::contiguous(&[3, 3]).unwrap();
        let y: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = sample_without_replacement(&g, SeedPolicy::Uniform, spec(2.0, 4), &y, Some(&labels), &mut rng)
            .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(RdsSample::from_json(&text).unwrap(), s);
        assert_eq!(s.blocks.as_ref().unwrap().len(), 4);
        assert!(RdsSample::from_json(r#"{"tree":{"parents":[null]},"nodes":[0],"y":[1],"degrees":[0],"with_replacement":true}"#).is_err());
    }
}
