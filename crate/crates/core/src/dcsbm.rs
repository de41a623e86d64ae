//! Degree-corrected stochastic blockmodel.
//!
//! Each unordered pair `{i, j}` (self-pairs included) carries an edge
//! independently with probability `θ_i θ_j B[z(i)][z(j)]`. Degree parameters
//! are normalized per block, `Σ_{i∈V_k} θ_i = 1`, which makes `B[u][v]` the
//! expected number of edges between blocks `u ≠ v` and `m = 1ᵀB1` the expected
//! degree total.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, Graph, GraphBuilder};
use crate::sampling::SamplingTree;

const THETA_SUM_TOL: f64 = 1e-9;

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcsbmParams {
    pub block_sizes: Vec<usize>,
    /// `B`, expected inter-block edge counts.
    pub affinity: Matrix,
    pub theta: Vec<f64>,
}

pub(crate) fn check_square_symmetric_positive(m: &Matrix, k: usize, what: &str) -> Result<()> {
    if m.len() != k || m.iter().any(|row| row.len() != k) {
        return Err(Error::arg(format!("{what} must be {k}x{k}")));
    }
    for u in 0..k {
        for v in 0..k {
            let x = m[u][v];
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::arg(format!("{what}[{u}][{v}] = {x} is not positive")));
            }
            if x != m[v][u] {
                return Err(Error::arg(format!("{what} is not symmetric at ({u}, {v})")));
            }
        }
    }
    Ok(())
}

impl DcsbmParams {
    pub fn new(
        block_sizes: Vec<usize>,
        affinity: Matrix,
        theta: Vec<f64>,
        labels: &BlockAssignment,
    ) -> Result<Self> {
        let p = Self {
            block_sizes,
            affinity,
            theta,
        };
        p.validate(labels)?;
        Ok(p)
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn node_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// `m = 1ᵀB1`.
    pub fn total_affinity(&self) -> f64 {
        self.affinity.iter().flatten().sum()
    }

    pub fn validate(&self, labels: &BlockAssignment) -> Result<()> {
        let k = self.num_blocks();
        if k == 0 {
            return Err(Error::arg("at least one block is required"));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::arg("block sizes must be positive"));
        }
        check_square_symmetric_positive(&self.affinity, k, "B")?;
        let n = self.node_count();
        if self.theta.len() != n {
            return Err(Error::arg(format!(
                "theta has {} entries for {n} nodes",
                self.theta.len()
            )));
        }
        if labels.num_blocks() != k || labels.block_sizes() != self.block_sizes {
            return Err(Error::arg("labels do not match block sizes"));
        }
        if let Some(i) = self.theta.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::arg(format!("theta[{i}] is not positive")));
        }
        let mut sums = vec![0.0; k];
        for (i, &t) in self.theta.iter().enumerate() {
            sums[labels.block_of(i)] += t;
        }
        if let Some((b, s)) = sums
            .iter()
            .enumerate()
            .find(|(_, s)| (*s - 1.0).abs() > THETA_SUM_TOL)
        {
            return Err(Error::arg(format!("theta sums to {s} over block {b}, expected 1")));
        }
        Ok(())
    }

    /// `E[d_i] = θ_i B_{z(i)*}`.
    pub fn expected_degree(&self, labels: &BlockAssignment, i: usize) -> f64 {
        self.theta[i] * self.affinity[labels.block_of(i)].iter().sum::<f64>()
    }

    fn is_block_homogeneous(&self, labels: &BlockAssignment) -> bool {
        let mut first: Vec<Option<f64>> = vec![None; self.num_blocks()];
        self.theta.iter().enumerate().all(|(i, &t)| {
            let slot = &mut first[labels.block_of(i)];
            match *slot {
                None => {
                    *slot = Some(t);
                    true
                }
                Some(t0) => (t - t0).abs() <= 1e-12 * t0,
            }
        })
    }
}

/// Returns `c·B_rel` with `c` chosen so that `1ᵀB1 = N · target_mean_degree`.
pub fn scale_to_mean_degree(
    b_rel: &Matrix,
    block_sizes: &[usize],
    target_mean_degree: f64,
) -> Result<Matrix> {
    if !(target_mean_degree.is_finite() && target_mean_degree > 0.0) {
        return Err(Error::arg("target mean degree must be positive"));
    }
    check_square_symmetric_positive(b_rel, block_sizes.len(), "B_rel")?;
    let n: usize = block_sizes.iter().sum();
    let rel_total: f64 = b_rel.iter().flatten().sum();
    let c = n as f64 * target_mean_degree / rel_total;
    Ok(b_rel
        .iter()
        .map(|row| row.iter().map(|x| x * c).collect())
        .collect())
}

/// `K×K` relative affinity with `p` on the diagonal and `q = 1 − p` off it,
/// where `p − q` is the bottleneck strength.
pub fn bottleneck_affinity(num_blocks: usize, strength: f64) -> Result<Matrix> {
    if !(0.0..1.0).contains(&strength) {
        return Err(Error::arg(format!(
            "bottleneck strength must lie in [0, 1), got {strength}"
        )));
    }
    let p = (1.0 + strength) / 2.0;
    let q = 1.0 - p;
    Ok((0..num_blocks)
        .map(|u| (0..num_blocks).map(|v| if u == v { p } else { q }).collect())
        .collect())
}

/// `θ_i = 1/N_{z(i)}`.
pub fn homogeneous_theta(labels: &BlockAssignment) -> Vec<f64> {
    let sizes = labels.block_sizes();
    labels
        .labels()
        .iter()
        .map(|&k| 1.0 / sizes[k] as f64)
        .collect()
}

/// Rescales `theta` so each block sums to one.
pub fn normalize_theta(theta: &mut [f64], labels: &BlockAssignment) {
    let mut sums = vec![0.0; labels.num_blocks()];
    for (i, &t) in theta.iter().enumerate() {
        sums[labels.block_of(i)] += t;
    }
    for (i, t) in theta.iter_mut().enumerate() {
        *t /= sums[labels.block_of(i)];
    }
}

/// Heavy-tailed degree parameters `θ_i ∝ U_i^{-exponent}` with `U_i` uniform
/// on `(0, 1]`, normalized per block. Exponent 0 gives the homogeneous case.
pub fn powerlaw_theta<R: Rng + ?Sized>(
    labels: &BlockAssignment,
    exponent: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(Error::arg(format!(
            "power-law exponent must be finite and non-negative, got {exponent}"
        )));
    }
    if exponent == 0.0 {
        return Ok(homogeneous_theta(labels));
    }
    let mut theta: Vec<f64> = (0..labels.len())
        .map(|_| (1.0 - rng.random::<f64>()).powf(-exponent))
        .collect();
    if let Some(i) = theta.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::arg(format!(
            "exponent {exponent} produced a degenerate weight at node {i}"
        )));
    }
    normalize_theta(&mut theta, labels);
    Ok(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMethod {
    /// One Bernoulli draw per unordered pair, `O(N²)`.
    Pairwise,
    /// Binomial edge count per block pair, then uniform placement over the
    /// block pair's node pairs. Needs `θ` constant within each block.
    BlockBinomial,
    /// `BlockBinomial` when `θ` is block-homogeneous, otherwise `Pairwise`.
    #[default]
    Auto,
}

#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: Graph,
    /// Node pairs whose probability exceeded 1 and was clamped.
    pub clamped_pairs: u64,
    pub method: GenerationMethod,
}

pub fn generate<R: Rng + ?Sized>(
    params: &DcsbmParams,
    labels: &BlockAssignment,
    rng: &mut R,
) -> Result<GeneratedGraph> {
    generate_with(params, labels, GenerationMethod::Pairwise, rng)
}

pub fn generate_with<R: Rng + ?Sized>(
    params: &DcsbmParams,
    labels: &BlockAssignment,
    method: GenerationMethod,
    rng: &mut R,
) -> Result<GeneratedGraph> {
    params.validate(labels)?;
    let homogeneous = params.is_block_homogeneous(labels);
    let method = match method {
        GenerationMethod::Auto if homogeneous => GenerationMethod::BlockBinomial,
        GenerationMethod::Auto => GenerationMethod::Pairwise,
        GenerationMethod::BlockBinomial if !homogeneous => {
            return Err(Error::arg(
                "block-binomial generation needs theta constant within each block",
            ))
        }
        m => m,
    };
    let (graph, clamped_pairs) = match method {
        GenerationMethod::BlockBinomial => block_binomial(params, labels, rng),
        _ => pairwise(params, labels, rng),
    };
    Ok(GeneratedGraph {
        graph,
        clamped_pairs,
        method,
    })
}

fn pairwise<R: Rng + ?Sized>(
    params: &DcsbmParams,
    labels: &BlockAssignment,
    rng: &mut R,
) -> (Graph, u64) {
    let n = params.node_count();
    let z = labels.labels();
    let theta = &params.theta;
    let mut b = GraphBuilder::new(n);
    let mut clamped = 0;
    for i in 0..n {
        let row = &params.affinity[z[i]];
        for j in i..n {
            let p = theta[i] * theta[j] * row[z[j]];
            let hit = if p >= 1.0 {
                clamped += u64::from(p > 1.0);
                true
            } else {
                rng.random::<f64>() < p
            };
            if hit {
                b.push_unchecked(i, j, 1.0);
            }
        }
    }
    (b.build_unchecked(), clamped)
}

/// Maps `t ∈ [0, s(s+1)/2)` to the `t`-th pair `(a, b)`, `a ≤ b < s`, in
/// row-major order.
fn triangular_pair(t: u64, s: u64) -> (u64, u64) {
    // Row a starts at a*s - a(a-1)/2.
    let start = |a: u64| a * s - a * a.saturating_sub(1) / 2;
    let sf = s as f64;
    let disc = (2.0 * sf + 1.0).powi(2) - 8.0 * t as f64;
    let mut a = (((2.0 * sf + 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as u64;
    a = a.min(s - 1);
    while a > 0 && start(a) > t {
        a -= 1;
    }
    while a + 1 < s && start(a + 1) <= t {
        a += 1;
    }
    (a, a + (t - start(a)))
}

fn block_binomial<R: Rng + ?Sized>(
    params: &DcsbmParams,
    labels: &BlockAssignment,
    rng: &mut R,
) -> (Graph, u64) {
    let k = params.num_blocks();
    let members: Vec<Vec<usize>> = (0..k).map(|b| labels.members(b)).collect();
    let theta_of: Vec<f64> = members.iter().map(|m| params.theta[m[0]]).collect();
    let expected = params.total_affinity().ceil() as usize;
    let mut b = GraphBuilder::with_capacity(params.node_count(), expected);
    let mut clamped = 0;
    for u in 0..k {
        for v in u..k {
            let (su, sv) = (members[u].len() as u64, members[v].len() as u64);
            let pairs = if u == v { su * (su + 1) / 2 } else { su * sv };
            let mut p = theta_of[u] * theta_of[v] * params.affinity[u][v];
            if p > 1.0 {
                clamped += pairs;
                p = 1.0;
            }
            let count = Binomial::new(pairs, p)
                .expect("probability in [0, 1]")
                .sample(rng);
            for t in index::sample(rng, pairs as usize, count as usize) {
                let t = t as u64;
                let (a, c) = if u == v {
                    triangular_pair(t, su)
                } else {
                    (t / sv, t % sv)
                };
                b.push_unchecked(members[u][a as usize], members[v][c as usize], 1.0);
            }
        }
    }
    (b.build_unchecked(), clamped)
}

/// Constants for the consistency conditions. Defaults are loose reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionThresholds {
    pub c_minus: f64,
    pub c_plus: f64,
    pub max_tree_degree: usize,
}

impl Default for AssumptionThresholds {
    fn default() -> Self {
        Self {
            c_minus: 0.01,
            c_plus: 100.0,
            max_tree_degree: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub passed: bool,
    pub min: f64,
    pub max: f64,
}

/// Measured ratios for the consistency conditions. Descriptive only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `N_k / N`.
    pub linear_blocks: AssumptionCheck,
    /// `B_uv / N²`.
    pub dense_graph: AssumptionCheck,
    /// `θ_i · N`.
    pub degree_homogeneity: AssumptionCheck,
    /// `y(i)`; `c_y` is the measured maximum.
    pub bounded_variables: AssumptionCheck,
    /// Maximum degree of the sampling tree.
    pub limited_referrals: AssumptionCheck,
    pub thresholds: AssumptionThresholds,
    pub warnings: Vec<String>,
}

fn min_max(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

pub fn check_assumptions(
    params: &DcsbmParams,
    y: &[f64],
    tree: &SamplingTree,
    thresholds: AssumptionThresholds,
) -> AssumptionReport {
    let n = params.node_count() as f64;
    let AssumptionThresholds {
        c_minus, c_plus, ..
    } = thresholds;
    let within = |(lo, hi): (f64, f64)| AssumptionCheck {
        passed: lo >= c_minus && hi <= c_plus,
        min: lo,
        max: hi,
    };

    let linear_blocks = within(min_max(params.block_sizes.iter().map(|&s| s as f64 / n)));
    let dense_graph = within(min_max(params.affinity.iter().flatten().map(|b| b / (n * n))));
    let degree_homogeneity = within(min_max(params.theta.iter().map(|t| t * n)));
    let (ylo, yhi) = min_max(y.iter().copied());
    let bounded_variables = AssumptionCheck {
        passed: ylo >= 0.0 && yhi.is_finite(),
        min: ylo,
        max: yhi,
    };
    let tree_deg = tree.max_degree() as f64;
    let limited_referrals = AssumptionCheck {
        passed: tree.max_degree() <= thresholds.max_tree_degree,
        min: tree_deg,
        max: tree_deg,
    };

    let mut warnings = Vec::new();
    for (name, check) in [
        ("linear-sized blocks", &linear_blocks),
        ("dense graph", &dense_graph),
        ("degree homogeneity", &degree_homogeneity),
        ("bounded variables", &bounded_variables),
        ("limited referrals", &limited_referrals),
    ] {
        if !check.passed {
            warnings.push(format!(
                "{name}: measured range [{}, {}] outside the reference bounds",
                check.min, check.max
            ));
        }
    }

    AssumptionReport {
        linear_blocks,
        dense_graph,
        degree_homogeneity,
        bounded_variables,
        limited_referrals,
        thresholds,
        warnings,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    #[default]
    Homogeneous,
    Powerlaw {
        exponent: f64,
    },
}

/// JSON model description: block layout, relative affinity and target density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcsbmConfig {
    #[serde(rename = "K")]
    pub num_blocks: usize,
    pub block_sizes: Vec<usize>,
    #[serde(rename = "B_rel")]
    pub b_rel: Matrix,
    pub target_mean_degree: f64,
    #[serde(default)]
    pub theta_mode: ThetaMode,
}

impl DcsbmConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "DC-SBM config".into(),
            source,
        })
    }

    /// Builds contiguous labels, scales `B_rel`, and draws `θ`.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(DcsbmParams, BlockAssignment)> {
        if self.num_blocks != self.block_sizes.len() {
            return Err(Error::arg(format!(
                "K = {} but {} block sizes given",
                self.num_blocks,
                self.block_sizes.len()
            )));
        }
        let labels = BlockAssignment::contiguous(&self.block_sizes)?;
        let affinity = scale_to_mean_degree(&self.b_rel, &self.block_sizes, self.target_mean_degree)?;
        let theta = match self.theta_mode {
            ThetaMode::Homogeneous => homogeneous_theta(&labels),
            ThetaMode::Powerlaw { exponent } => powerlaw_theta(&labels, exponent, rng)?,
        };
        let params = DcsbmParams::new(self.block_sizes.clone(), affinity, theta, &labels)?;
        Ok((params, labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_block(n_half: usize, b: Matrix) -> (DcsbmParams, BlockAssignment) {
        let labels = BlockAssignment::contiguous(&[n_half, n_half]).unwrap();
        let theta = homogeneous_theta(&labels);
        (
            DcsbmParams::new(vec![n_half, n_half], b, theta, &labels).unwrap(),
            labels,
        )
    }

    #[test]
    fn scale_examples() {
        let rel = vec![vec![0.95, 0.05], vec![0.05, 0.95]];
        let b = scale_to_mean_degree(&rel, &[50_000, 50_000], 100.0).unwrap();
        assert!((b[0][0] / 0.95 - 5e6).abs() < 1e-6);
        assert!((b[0][1] / 0.05 - 5e6).abs() < 1e-6);

        let b = scale_to_mean_degree(&vec![vec![1.0]], &[100], 10.0).unwrap();
        assert_eq!(b, vec![vec![1000.0]]);

        let already = vec![vec![30.0, 10.0], vec![10.0, 30.0]];
        assert_eq!(scale_to_mean_degree(&already, &[2, 2], 20.0).unwrap(), already);

        assert!(scale_to_mean_degree(&vec![vec![1.0, 2.0], vec![1.0, 1.0]], &[1, 1], 1.0).is_err());
        assert!(scale_to_mean_degree(&vec![vec![0.0]], &[1], 1.0).is_err());
        assert!(scale_to_mean_degree(&vec![vec![1.0]], &[1], 0.0).is_err());
    }

    #[test]
    fn theta_modes() {
        let labels = BlockAssignment::contiguous(&[4, 2]).unwrap();
        let h = homogeneous_theta(&labels);
        assert_eq!(&h[..4], &[0.25; 4]);
        assert_eq!(&h[4..], &[0.5; 2]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(powerlaw_theta(&labels, 0.0, &mut rng).unwrap(), h);
        let t = powerlaw_theta(&labels, 1.5, &mut rng).unwrap();
        let s0: f64 = t[..4].iter().sum();
        let s1: f64 = t[4..].iter().sum();
        assert!((s0 - 1.0).abs() < 1e-12 && (s1 - 1.0).abs() < 1e-12);
        assert!(powerlaw_theta(&labels, -1.0, &mut rng).is_err());
        assert!(powerlaw_theta(&labels, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn expected_degree_examples() {
        let (p, labels) = two_block(50, vec![vec![3000.0, 1000.0], vec![1000.0, 3000.0]]);
        // B_{k*}/N_k with homogeneous theta.
        assert!((p.expected_degree(&labels, 0) - 80.0).abs() < 1e-12);

        let labels = BlockAssignment::contiguous(&[2]).unwrap();
        let p = DcsbmParams::new(vec![2], vec![vec![9.0]], vec![2.0 / 3.0, 1.0 / 3.0], &labels).unwrap();
        assert!((p.expected_degree(&labels, 0) - 2.0 * p.expected_degree(&labels, 1)).abs() < 1e-12);

        let cfg = DcsbmConfig {
            num_blocks: 2,
            block_sizes: vec![500, 500],
            b_rel: vec![vec![0.95, 0.05], vec![0.05, 0.95]],
            target_mean_degree: 100.0,
            theta_mode: ThetaMode::Homogeneous,
        };
        let (p, labels) = cfg.build(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for i in [0, 499, 500, 999] {
            assert!((p.expected_degree(&labels, i) - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn validation() {
        let labels = BlockAssignment::contiguous(&[2, 2]).unwrap();
        let b = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(DcsbmParams::new(vec![2, 2], b.clone(), vec![0.5; 4], &labels).is_ok());
        assert!(DcsbmParams::new(vec![2, 2], b.clone(), vec![0.4; 4], &labels).is_err());
        assert!(DcsbmParams::new(vec![2, 2], b.clone(), vec![0.5; 3], &labels).is_err());
        let asym = vec![vec![1.0, 2.0], vec![1.0, 1.0]];
        assert!(DcsbmParams::new(vec![2, 2], asym, vec![0.5; 4], &labels).is_err());
        assert!(DcsbmParams::new(vec![3, 1], b, vec![0.5; 4], &labels).is_err());
    }

    #[test]
    fn single_node_self_loop() {
        let labels = BlockAssignment::contiguous(&[1]).unwrap();
        let p = DcsbmParams::new(vec![1], vec![vec![0.5]], vec![1.0], &labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = [false; 2];
        for _ in 0..64 {
            for method in [GenerationMethod::Pairwise, GenerationMethod::BlockBinomial] {
                let g = generate_with(&p, &labels, method, &mut rng).unwrap().graph;
                assert!(g.edge_count() <= 1);
                seen[g.edge_count()] = true;
                if g.edge_count() == 1 {
                    assert_eq!(g.weight(0, 0).unwrap(), 1.0);
                }
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn clamping_is_counted() {
        let (p, labels) = two_block(3, vec![vec![18.0, 1.0], vec![1.0, 18.0]]);
        // θ = 1/3 so within-block pairs have probability 2.
        for method in [GenerationMethod::Pairwise, GenerationMethod::BlockBinomial] {
            let out = generate_with(&p, &labels, method, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert_eq!(out.clamped_pairs, 12);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(out.graph.weight(i, j).unwrap(), 1.0);
                }
            }
        }
    }

    #[test]
    fn triangular_pairs_enumerate_in_order() {
        for s in 1..12u64 {
            let mut t = 0;
            for a in 0..s {
                for b in a..s {
                    assert_eq!(triangular_pair(t, s), (a, b), "s={s} t={t}");
                    t += 1;
                }
            }
        }
        let s = 50_000u64;
        let last = s * (s + 1) / 2 - 1;
        assert_eq!(triangular_pair(last, s), (s - 1, s - 1));
        assert_eq!(triangular_pair(s, s), (1, 1));
    }

    #[test]
    fn same_seed_same_graph() {
        let (p, labels) = two_block(40, vec![vec![200.0, 20.0], vec![20.0, 200.0]]);
        for method in [GenerationMethod::Pairwise, GenerationMethod::BlockBinomial] {
            let a = generate_with(&p, &labels, method, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            let b = generate_with(&p, &labels, method, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            assert_eq!(a.graph, b.graph);
        }
    }

    #[test]
    fn block_binomial_rejects_heterogeneous_theta() {
        let labels = BlockAssignment::contiguous(&[2]).unwrap();
        let p = DcsbmParams::new(vec![2], vec![vec![1.0]], vec![0.75, 0.25], &labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_with(&p, &labels, GenerationMethod::BlockBinomial, &mut rng).is_err());
        let out = generate_with(&p, &labels, GenerationMethod::Auto, &mut rng).unwrap();
        assert_eq!(out.method, GenerationMethod::Pairwise);
    }

    #[test]
    fn assumption_report() {
        let cfg = DcsbmConfig {
            num_blocks: 2,
            block_sizes: vec![50_000, 50_000],
            b_rel: vec![vec![0.95, 0.05], vec![0.05, 0.95]],
            target_mean_degree: 100.0,
            theta_mode: ThetaMode::Homogeneous,
        };
        let (p, _) = cfg.build(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let tree = SamplingTree::complete_ary(2, 3);
        let y: Vec<f64> = (0..p.node_count()).map(|i| (i % 2) as f64).collect();
        let r = check_assumptions(&p, &y, &tree, AssumptionThresholds::default());
        assert!(r.linear_blocks.passed);
        assert_eq!(r.linear_blocks.min, 0.5);
        assert!(!r.dense_graph.passed);
        assert!(r.warnings.iter().any(|w| w.starts_with("dense graph")));
        assert_eq!(r.bounded_variables.max, 1.0);
        assert!(r.bounded_variables.passed);
        assert_eq!(r.limited_referrals.max, 3.0);
        assert!(r.degree_homogeneity.passed);
    }

    #[test]
    fn config_json_schema() {
        let text = r#"{"K": 2, "block_sizes": [10, 10], "B_rel": [[0.9, 0.1], [0.1, 0.9]],
                       "target_mean_degree": 4, "theta_mode": {"powerlaw": {"exponent": 0.5}}}"#;
        let cfg = DcsbmConfig::from_json(text).unwrap();
        assert_eq!(cfg.theta_mode, ThetaMode::Powerlaw { exponent: 0.5 });
        let (p, _) = cfg.build(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((p.total_affinity() / 20.0 - 4.0).abs() < 1e-9);
        let back: DcsbmConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let bad = r#"{"K": 3, "block_sizes": [10, 10], "B_rel": [[1,1],[1,1]], "target_mean_degree": 4}"#;
        assert!(DcsbmConfig::from_json(bad).unwrap().build(&mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}
