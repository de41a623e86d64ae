use std::fs::File;

use rdsps::estimators::Estimator;
use rdsps::experiments::{self, ExperimentConfig, ReportFormat, SweepAxis};
use rdsps::graph::{write_edge_list, write_labels, BlockAssignment, Graph};

fn base(network: &str, outcome: &str, extra: &str) -> String {
    format!(
        r#"{{
            "master_seed": 11,
            "network": {network},
            "outcome": {outcome},
            "sampling": {{"n_target": 40}},
            "replication": {{"networks": 2, "samples_per_network": 30}}{extra}
        }}"#
    )
}

const BOTTLENECK: &str = r#"{"kind": "bottleneck", "node_count": 400, "strength": 0.8, "mean_degree": 20}"#;

#[test]
fn edge_list_network_from_files() {
    let dir = tempfile::tempdir().unwrap();
    // two 6-cycles joined by one edge, plus an isolated node 12
    let mut edges: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
    edges.extend((6..12).map(|i| (i, 6 + (i + 1 - 6) % 6)));
    edges.push((0, 6));
    let edges: Vec<_> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    let g = Graph::from_edges(13, &edges).unwrap();
    let labels = BlockAssignment::contiguous(&[6, 7]).unwrap();
    write_edge_list(&g, File::create(dir.path().join("g.txt")).unwrap()).unwrap();
    write_labels(&labels, File::create(dir.path().join("z.txt")).unwrap()).unwrap();
    let values: String = (0..13).map(|i| format!("{i} {}\n", i % 3)).collect();
    std::fs::write(dir.path().join("y.txt"), values).unwrap();

    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        base(
            r#"{"kind": "edge_list", "path": "g.txt", "labels": "z.txt"}"#,
            r#"{"kind": "file", "path": "y.txt"}"#,
            r#", "sampling": {"n_target": 6, "mode": "without_replacement"}"#,
        )
        .replace(r#""sampling": {"n_target": 40},"#, ""),
    )
    .unwrap();
    let cfg = ExperimentConfig::from_path(&cfg_path).unwrap();
    let report = experiments::run(&cfg).unwrap();
    assert_eq!(report.rows.len(), 8);
    let meta = &report.networks[0];
    assert_eq!(meta.original_node_count, 13);
    assert_eq!(meta.lcc_size, 12);
    // y = i mod 3 over nodes 0..12
    let mu: f64 = (0..12).map(|i| (i % 3) as f64).sum::<f64>() / 12.0;
    assert!((report.rows[0].mu_true - mu).abs() < 1e-15);
    assert_eq!(report.networks[0].block_sizes, vec![6, 6]);
}

#[test]
fn sweep_rows_carry_axis_values() {
    let cfg = ExperimentConfig::from_json(&base(BOTTLENECK, r#"{"kind": "block_indicator"}"#, "")).unwrap();
    let values = [0.0, 0.4, 0.8];
    let report = experiments::sweep(&cfg, SweepAxis::Bottleneck, &values).unwrap();
    assert_eq!(report.rows.len(), 3 * 2 * 4);
    for (chunk, v) in report.rows.chunks(8).zip(values) {
        assert!(chunk.iter().all(|r| r.axis_value == Some(v)));
    }
}

#[test]
fn larger_samples_reduce_rmse() {
    let mut cfg = ExperimentConfig::from_json(&base(BOTTLENECK, r#"{"kind": "alignment", "alignment": 0.6}"#, "")).unwrap();
    cfg.estimators = vec![Estimator::Vh, Estimator::Ps];
    cfg.replication.samples_per_network = 60;
    let report = experiments::sweep(&cfg, SweepAxis::SampleSize, &[20.0, 200.0]).unwrap();
    for est in [Estimator::Vh, Estimator::Ps] {
        let at = |v: f64| -> f64 {
            let rows: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.estimator == est && r.axis_value == Some(v))
                .map(|r| r.rmse.unwrap())
                .collect();
            rows.iter().sum::<f64>() / rows.len() as f64
        };
        assert!(at(200.0) < at(20.0), "{est:?}");
    }
}

#[test]
fn density_and_size_sweeps_run() {
    let cfg = ExperimentConfig::from_json(&base(BOTTLENECK, r#"{"kind": "block_indicator"}"#, "")).unwrap();
    let r = experiments::sweep(&cfg, SweepAxis::Density, &[5.0, 30.0]).unwrap();
    assert_eq!(r.networks.len(), 4);
    let r = experiments::sweep(&cfg, SweepAxis::NetworkSize, &[900.0, 1600.0]).unwrap();
    assert_eq!(r.networks[0].original_node_count, 900);
    assert!(experiments::sweep(&cfg, SweepAxis::NetworkSize, &[4.0]).is_err());
}

#[test]
fn metric_identity_on_every_row() {
    let cfg = ExperimentConfig::from_json(&base(BOTTLENECK, r#"{"kind": "alignment", "alignment": 0.5}"#, "")).unwrap();
    let report = experiments::run(&cfg).unwrap();
    let m = cfg.replication.samples_per_network;
    for r in &report.rows {
        let k = (m - r.failures) as f64;
        let (b, sd, rmse) = (r.abs_bias.unwrap(), r.sd.unwrap(), r.rmse.unwrap());
        assert!((rmse * rmse - (b * b + sd * sd * (k - 1.0) / k)).abs() < 1e-10);
    }
}

#[test]
fn report_files_round_trip() {
    let cfg = ExperimentConfig::from_json(&base(BOTTLENECK, r#"{"kind": "block_indicator"}"#, "")).unwrap();
    let report = experiments::run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    experiments::write_report(&report, &path, ReportFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("network_id,axis_value,estimator,abs_bias,sd,rmse,mu_true,failures\n"));
    let twin = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    let back = experiments::ExperimentReport::from_json(&twin).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.master_seed, 11);
}
