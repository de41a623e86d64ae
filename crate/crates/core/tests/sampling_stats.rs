use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rdsps::graph::{BlockAssignment, Graph};
use rdsps::oracle;
use rdsps::sampling::{
    sample_with_replacement, sample_without_replacement, RdsSample, RecruitmentSpec, SamplingTree, SeedPolicy,
};
use rdsps::Error;

/// Smallest root of `q = exp(λ(q − 1))` by fixed-point iteration from 0.
fn extinction_fixed_point(lambda: f64) -> f64 {
    let mut q = 0.0;
    for _ in 0..10_000 {
        q = (lambda * (q - 1.0)).exp();
    }
    q
}

#[test]
fn galton_watson_extinction_rate() {
    const RUNS: usize = 100_000;
    let q = extinction_fixed_point(2.0);
    assert!((q - 0.2032).abs() < 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let extinct = (0..RUNS)
        .filter(|_| SamplingTree::poisson(&mut rng, 2.0, 200).unwrap().is_err())
        .count();
    let rate = extinct as f64 / RUNS as f64;
    let sigma = (q * (1.0 - q) / RUNS as f64).sqrt();
    assert!((rate - q).abs() < 3.0 * sigma, "rate {rate} vs {q}");
}

#[test]
fn triangle_referrals_are_uniform() {
    const TRIALS: usize = 2000;
    let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let tree = SamplingTree::complete_ary(2, 5);
    let y = [0.0; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut forward = [0usize; 3];
    let mut total = [0usize; 3];
    for _ in 0..TRIALS {
        let s = sample_with_replacement(&g, &tree, SeedPolicy::Uniform, &y, None, &mut rng).unwrap();
        for (p, t) in s.tree.referrals() {
            let (a, b) = (s.nodes[p], s.nodes[t]);
            assert_ne!(a, b);
            total[a] += 1;
            forward[a] += usize::from(b == (a + 1) % 3);
        }
    }
    for a in 0..3 {
        let n = total[a] as f64;
        let z = (forward[a] as f64 - n / 2.0) / (n / 4.0).sqrt();
        assert!(z.abs() < 3.0, "node {a}: z = {z}");
    }
}

#[test]
fn depth_three_law_matches_enumeration() {
    const TRIALS: usize = 100_000;
    let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 4)]).unwrap();
    let tree = SamplingTree::path(4);
    let seed = vec![0.2; 5];
    let exact = oracle::enumerate_walks(&g, &tree, &seed).unwrap().marginal(3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut counts = [0usize; 5];
    let y = [0.0; 5];
    for _ in 0..TRIALS {
        let s = sample_with_replacement(&g, &tree, SeedPolicy::Uniform, &y, None, &mut rng).unwrap();
        counts[s.nodes[3]] += 1;
    }
    for i in 0..5 {
        let p = exact[i];
        let f = counts[i] as f64 / TRIALS as f64;
        let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt();
        assert!((f - p).abs() < 4.0 * sigma, "node {i}: {f} vs {p}");
    }
}

#[test]
fn one_step_frequencies_match_kernel() {
    const TRIALS: usize = 20_000;
    let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
    let tree = SamplingTree::path(2);
    let y = [0.0; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut counts = [0usize; 4];
    for _ in 0..TRIALS {
        let s = sample_with_replacement(&g, &tree, SeedPolicy::Fixed(0), &y, None, &mut rng).unwrap();
        counts[s.nodes[1]] += 1;
    }
    for j in 1..4 {
        let p = g.transition_prob(0, j).unwrap();
        let f = counts[j] as f64 / TRIALS as f64;
        assert!((f - p).abs() < 3.0 * (p * (1.0 - p) / TRIALS as f64).sqrt());
    }
}

#[test]
fn regular_graph_degree_seed_is_uniform() {
    const TRIALS: usize = 30_000;
    let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
    let g = Graph::from_edges(6, &edges).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut counts = [0usize; 6];
    for _ in 0..TRIALS {
        counts[rdsps::sampling::select_seed(SeedPolicy::DegreeProportional, &g, &mut rng).unwrap()] += 1;
    }
    let p = 1.0 / 6.0;
    for c in counts {
        let f = c as f64 / TRIALS as f64;
        assert!((f - p).abs() < 3.0 * (p * (1.0 - p) / TRIALS as f64).sqrt());
    }
}

#[test]
fn sampling_is_reproducible() {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
    let labels = BlockAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
    let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let spec = RecruitmentSpec {
        lambda: 2.0,
        n_target: 5,
        max_restarts: 100,
    };
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_without_replacement(&g, SeedPolicy::Uniform, spec, &y, Some(&labels), &mut rng).unwrap();
        serde_json::to_string(&s).unwrap()
    };
    assert_eq!(draw(9), draw(9));
    let back = RdsSample::from_json(&draw(9)).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), draw(9));
}

fn arb_connected() -> impl Strategy<Value = Graph> {
    (2usize..40).prop_flat_map(|n| {
        let spine = prop::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = prop::collection::vec((0..n, 0..n), 0..3 * n);
        (spine, extra).prop_map(move |(spine, extra)| {
            let mut seen = std::collections::HashSet::new();
            let mut edges = Vec::new();
            for (t, ix) in spine.iter().enumerate() {
                let child = t + 1;
                let parent = ix.index(child);
                seen.insert((parent, child));
                edges.push((parent, child));
            }
            for (a, b) in extra {
                let e = (a.min(b), a.max(b));
                if seen.insert(e) {
                    edges.push(e);
                }
            }
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn without_replacement_invariants(
        g in arb_connected(),
        frac in 0.05f64..1.0,
        lambda in 0.5f64..4.0,
        seed in any::<u64>(),
    ) {
        let n_target = ((g.node_count() as f64 * frac).ceil() as usize).max(1);
        let y = vec![0.0; g.node_count()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = RecruitmentSpec { lambda, n_target, max_restarts: 100 };
        match sample_without_replacement(&g, SeedPolicy::DegreeProportional, spec, &y, None, &mut rng) {
            Ok(s) => {
                prop_assert_eq!(s.len(), n_target);
                let mut seen = std::collections::HashSet::new();
                prop_assert!(s.nodes.iter().all(|x| seen.insert(*x)));
                for (p, t) in s.tree.referrals() {
                    prop_assert!(p < t);
                    prop_assert!(g.weight(s.nodes[p], s.nodes[t]).unwrap() > 0.0);
                }
                let d = s.tree.depths();
                prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(s.restarts <= 100);
            }
            Err(Error::SamplingFailure { restarts }) => prop_assert_eq!(restarts, 100),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn with_replacement_follows_edges(g in arb_connected(), seed in any::<u64>(), levels in 1usize..6) {
        let y = vec![0.0; g.node_count()];
        let tree = SamplingTree::complete_ary(2, levels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_with_replacement(&g, &tree, SeedPolicy::Uniform, &y, None, &mut rng).unwrap();
        prop_assert_eq!(s.len(), tree.len());
        for (p, t) in s.tree.referrals() {
            prop_assert!(g.weight(s.nodes[p], s.nodes[t]).unwrap() > 0.0);
        }
    }
}
