use std::collections::VecDeque;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rdsps::dcsbm::{self, DcsbmParams, GenerationMethod};
use rdsps::graph::{largest_connected_component, load_edge_list, write_edge_list, BlockAssignment, Graph};

/// Component of every node by plain BFS, with components numbered by
/// their smallest node.
fn bfs_components(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = s;
                    queue.push_back(v);
                }
            }
        }
    }
    comp
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..40).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..60).prop_map(move |pairs| {
            let mut seen = std::collections::HashSet::new();
            let edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .filter(|e| seen.insert(*e))
                .collect();
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn lcc_matches_bfs(g in arb_graph()) {
        let comp = bfs_components(&g);
        let n = g.node_count();
        let mut size = vec![0usize; n];
        for &c in &comp {
            size[c] += 1;
        }
        // largest size, ties to the component with the smallest node
        let best = (0..n).max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a))).unwrap();
        let want: Vec<usize> = (0..n).filter(|&i| comp[i] == best).collect();

        let lcc = largest_connected_component(&g);
        prop_assert_eq!(&lcc.new_to_old, &want);
        prop_assert!(lcc.graph.is_connected());
        let kept_edges = g.edges().filter(|(i, _, _)| comp[*i] == best).count();
        prop_assert_eq!(lcc.graph.edge_count(), kept_edges);
    }

    #[test]
    fn degree_and_stationary_invariants(g in arb_graph()) {
        let loops = g.edges().filter(|(i, j, _)| i == j).count() as f64;
        let others = g.edges().filter(|(i, j, _)| i != j).count() as f64;
        prop_assert_eq!(g.total_degree(), 2.0 * others + loops);
        if g.is_connected() && g.total_degree() > 0.0 {
            let pi = g.stationary_distribution().unwrap();
            prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..g.node_count() {
                let moved: f64 = (0..g.node_count())
                    .filter(|&i| g.weight(i, j).unwrap() > 0.0)
                    .map(|i| pi[i] * g.transition_prob(i, j).unwrap())
                    .sum();
                prop_assert!((moved - pi[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_list_round_trip(g in arb_graph()) {
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = load_edge_list(&buf[..]).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn edge_list_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 2), (4, 5)]).unwrap();
    write_edge_list(&g, std::fs::File::create(&path).unwrap()).unwrap();
    let back = load_edge_list(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.node_count(), 6);
}

/// Expected count and variance of edges between blocks `u ≤ v`, summed
/// pair by pair with clamping.
fn block_pair_moments(params: &DcsbmParams, labels: &BlockAssignment, u: usize, v: usize) -> (f64, f64) {
    let n = labels.len();
    let (mut mean, mut var) = (0.0, 0.0);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (labels.block_of(i), labels.block_of(j));
            if (a.min(b), a.max(b)) != (u, v) {
                continue;
            }
            let p = (params.theta[i] * params.theta[j] * params.affinity[a][b]).min(1.0);
            mean += p;
            var += p * (1.0 - p);
        }
    }
    (mean, var)
}

fn block_pair_count(g: &Graph, labels: &BlockAssignment, u: usize, v: usize) -> f64 {
    g.edges()
        .filter(|(i, j, _)| {
            let (a, b) = (labels.block_of(*i), labels.block_of(*j));
            (a.min(b), a.max(b)) == (u, v)
        })
        .count() as f64
}

fn check_block_counts(params: &DcsbmParams, labels: &BlockAssignment, method: GenerationMethod, seed: u64) {
    const REPS: usize = 200;
    let k = labels.num_blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut totals = vec![vec![0.0; k]; k];
    let mut squares = vec![vec![0.0; k]; k];
    for _ in 0..REPS {
        let g = dcsbm::generate_with(params, labels, method, &mut rng).unwrap().graph;
        for u in 0..k {
            for v in u..k {
                let c = block_pair_count(&g, labels, u, v);
                totals[u][v] += c;
                squares[u][v] += c * c;
            }
        }
    }
    for u in 0..k {
        for v in u..k {
            let (mean, var) = block_pair_moments(params, labels, u, v);
            let m = totals[u][v] / REPS as f64;
            let z = (m - mean) / (var / REPS as f64).sqrt();
            assert!(z.abs() < 3.0, "{method:?} blocks ({u},{v}): mean {m} vs {mean}, z = {z}");
            let s2 = (squares[u][v] - REPS as f64 * m * m) / (REPS as f64 - 1.0);
            assert!((s2 / var - 1.0).abs() < 0.35, "{method:?} blocks ({u},{v}): variance {s2} vs {var}");
        }
    }
}

#[test]
fn block_pair_counts_homogeneous_both_methods() {
    let labels = BlockAssignment::contiguous(&[60, 40]).unwrap();
    let params = DcsbmParams::new(
        vec![60, 40],
        vec![vec![600.0, 150.0], vec![150.0, 300.0]],
        dcsbm::homogeneous_theta(&labels),
        &labels,
    )
    .unwrap();
    check_block_counts(&params, &labels, GenerationMethod::Pairwise, 1);
    check_block_counts(&params, &labels, GenerationMethod::BlockBinomial, 2);
}

#[test]
fn block_pair_counts_heterogeneous_theta() {
    let labels = BlockAssignment::contiguous(&[30, 50, 20]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta = dcsbm::powerlaw_theta(&labels, 0.4, &mut rng).unwrap();
    let params = DcsbmParams::new(
        vec![30, 50, 20],
        vec![
            vec![200.0, 40.0, 20.0],
            vec![40.0, 300.0, 30.0],
            vec![20.0, 30.0, 80.0],
        ],
        theta,
        &labels,
    )
    .unwrap();
    check_block_counts(&params, &labels, GenerationMethod::Pairwise, 4);
}

#[test]
fn erdos_renyi_edge_count() {
    // one block with homogeneous theta: every pair i ≤ j has p = B / N²
    let n = 300;
    let b = 9000.0;
    let labels = BlockAssignment::contiguous(&[n]).unwrap();
    let params = DcsbmParams::new(vec![n], vec![vec![b]], dcsbm::homogeneous_theta(&labels), &labels).unwrap();
    let p = b / (n * n) as f64;
    let pairs = (n * (n + 1) / 2) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for method in [GenerationMethod::Pairwise, GenerationMethod::BlockBinomial] {
        for _ in 0..5 {
            let m = dcsbm::generate_with(&params, &labels, method, &mut rng).unwrap().graph.edge_count() as f64;
            let z = (m - pairs * p) / (pairs * p * (1.0 - p)).sqrt();
            assert!(z.abs() < 3.5, "{method:?}: {m} edges, z = {z}");
        }
    }
}

#[test]
fn mean_degree_targets() {
    let cfg = dcsbm::DcsbmConfig::from_json(
        r#"{"K": 2, "block_sizes": [400, 600], "B_rel": [[3, 1], [1, 2]], "target_mean_degree": 12}"#,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (params, labels) = cfg.build(&mut rng).unwrap();
    let expected: f64 = (0..1000).map(|i| params.expected_degree(&labels, i)).sum::<f64>() / 1000.0;
    assert!((expected - 12.0).abs() < 1e-9);
    let g = dcsbm::generate_with(&params, &labels, GenerationMethod::Auto, &mut rng).unwrap();
    assert_eq!(g.method, GenerationMethod::BlockBinomial);
    assert!((g.graph.mean_degree() - 12.0).abs() < 0.5);
}
