//! `rdsps` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, unreadable or
//! invalid inputs), 1 for failures while running. Errors are also written
//! to stderr as one JSON line `{"error": ..., "kind": ...}`.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rdsps::dcsbm::{self, check_assumptions, AssumptionThresholds, DcsbmConfig, GenerationMethod};
use rdsps::estimators::{self, Estimator, EstimatorContext, DEFAULT_SMOOTHING};
use rdsps::experiments::{
    self, build_network, build_outcome, draw_sample, model_params, with_threads, write_report,
    ExperimentConfig, ExperimentReport, NetworkSpec, ReportFormat, SamplingMode, SamplingSpec,
    ScalingConfig, ScalingReport, SweepAxis, TreeSpec,
};
use rdsps::graph::{
    largest_connected_component, load_edge_list, load_labels, load_values, write_edge_list,
    write_labels, BlockAssignment, Graph,
};
use rdsps::population::{empirical_affinity, population_model, transition_concentration};
use rdsps::rng::{stream, Purpose};
use rdsps::sampling::{RdsSample, SeedPolicy, DEFAULT_MAX_RESTARTS};
use rdsps::Error;

const FORMATS: &str = "\
FILE FORMATS
  edge list    one edge per line, `i j` or `i j w` (0-based ids, positive weight,
               default 1). `#` starts a comment; `# nodes N` declares N nodes.
  labels       `i k` per line: block k of node i, k in 0..K.
  values       `i y` per line: finite outcome of node i.
  sample       JSON with tree.parents, nodes, y, degrees, blocks, num_blocks,
               with_replacement (as written by `rdsps sample`).
  report CSV   network_id,axis_value,estimator,abs_bias,sd,rmse,mu_true,failures
               with a JSON twin (same name, .json) holding config and metadata.
  scaling CSV  estimator,n,mean,variance,failures,slope,slope_se,predicted_vh_slope

EXIT CODES
  0 success, 1 runtime failure, 2 usage error.";

#[derive(Parser)]
#[command(name = "rdsps", version, about = "Respondent-driven sampling estimators and simulations", after_help = FORMATS)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a DC-SBM network and write its edge list and block labels.
    Generate(GenerateArgs),
    /// Draw one RDS sample from an observed network.
    Sample(SampleArgs),
    /// Apply estimators to a sample file.
    Estimate(EstimateArgs),
    /// Run a simulation study from a JSON config.
    Experiment(ExperimentArgs),
    /// Run a simulation study across values of one factor.
    Sweep(SweepArgs),
    /// Variance growth of VH and PS on complete binary referral trees.
    Scaling(ScalingArgs),
    /// Population block model, transition concentration and model checks.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (default: stdout). CSV output also writes a .json twin.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GenerateArgs {
    /// Network JSON: `{"kind": "bottleneck", ...}`, `{"kind": "dcsbm", "model": {...}}`,
    /// or a bare model `{"K", "block_sizes", "B_rel", "target_mean_degree", "theta_mode"}`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Edge list output.
    #[arg(long)]
    out: PathBuf,
    /// Block label output.
    #[arg(long)]
    labels_out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Keep only the largest connected component, renumbered.
    #[arg(long)]
    lcc: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Pairwise,
    BlockBinomial,
    Auto,
}

impl From<Method> for GenerationMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Pairwise => GenerationMethod::Pairwise,
            Method::BlockBinomial => GenerationMethod::BlockBinomial,
            Method::Auto => GenerationMethod::Auto,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Outcome values (default: indicator of block 1).
    #[arg(long)]
    values: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::WithoutReplacement)]
    mode: Mode,
    /// Poisson mean of coupons per recruit.
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long)]
    n_target: Option<usize>,
    /// degree_proportional, stationary, uniform, or fixed:ID (original id).
    #[arg(long, default_value = "degree_proportional", value_parser = parse_seed_policy)]
    seed_policy: SeedPolicy,
    #[arg(long, default_value_t = DEFAULT_MAX_RESTARTS)]
    max_restarts: usize,
    /// With replacement only: full tree `ARITY:LEVELS` instead of a Poisson tree.
    #[arg(long, value_parser = parse_complete_tree)]
    complete_tree: Option<(usize, usize)>,
    /// Sample JSON output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    WithoutReplacement,
    WithReplacement,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    sample: PathBuf,
    /// Comma-separated subset of mean, ipw, vh, ps.
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    estimators: Option<Vec<Estimator>>,
    /// Population mean degree; IPW runs only when given.
    #[arg(long)]
    mean_degree: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: f64,
    /// Number of blocks (default: from the sample).
    #[arg(long)]
    num_blocks: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Factor to vary (default: the config's sweep).
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', requires = "axis")]
    values: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Bottleneck,
    Alignment,
    Density,
    NetworkSize,
    SampleSize,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Bottleneck => SweepAxis::Bottleneck,
            Axis::Alignment => SweepAxis::Alignment,
            Axis::Density => SweepAxis::Density,
            Axis::NetworkSize => SweepAxis::NetworkSize,
            Axis::SampleSize => SweepAxis::SampleSize,
        }
    }
}

#[derive(Args)]
struct ScalingArgs {
    /// Optional JSON with the fields below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Flip probability; needs 2(1-2p)^2 > 1.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated tree depths L (tree size 2^L - 1).
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    mean_degree: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Experiment config; diagnoses its first network.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seed_policy(s: &str) -> Result<SeedPolicy, String> {
    match s {
        "degree_proportional" => Ok(SeedPolicy::DegreeProportional),
        "stationary" => Ok(SeedPolicy::Stationary),
        "uniform" => Ok(SeedPolicy::Uniform),
        _ => s
            .strip_prefix("fixed:")
            .and_then(|id| id.parse().ok())
            .map(SeedPolicy::Fixed)
            .ok_or_else(|| format!("unknown seed policy {s:?}")),
    }
}

fn parse_complete_tree(s: &str) -> Result<(usize, usize), String> {
    let (a, l) = s.split_once(':').ok_or("expected ARITY:LEVELS")?;
    let a = a.parse().map_err(|_| format!("bad arity {a:?}"))?;
    let l = l.parse().map_err(|_| format!("bad levels {l:?}"))?;
    Ok((a, l))
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.trim().parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String, &'static str),
    Runtime(Error),
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into(), "usage")
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Errors while reading inputs count as usage errors.
trait InputContext<T> {
    fn input(self) -> CliResult<T>;
}

impl<T> InputContext<T> for rdsps::Result<T> {
    fn input(self) -> CliResult<T> {
        self.map_err(|e| Failure::Usage(e.to_string(), e.kind()))
    }
}

fn runtime<T>(r: rdsps::Result<T>) -> CliResult<T> {
    r.map_err(Failure::Runtime)
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()), "io"))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()), "io"))
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| Failure::Runtime(Error::Io { path: path.into(), source: e }))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => create(p)?
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(Error::Io { path: p.into(), source: e })),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            let msg = e.kind().as_str().unwrap_or("invalid arguments");
            eprintln!("{}", json!({"error": msg, "kind": "usage"}));
            return ExitCode::from(2);
        }
    };
    let threads = cli.threads;
    let result = match with_threads(threads, move || dispatch(cli.command)) {
        Ok(r) => r,
        Err(e) => Err(Failure::Usage(e.to_string(), e.kind())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg, kind)) => {
            eprintln!("{}", json!({"error": msg, "kind": kind}));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("{}", json!({"error": e.to_string(), "kind": e.kind()}));
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate(a),
        Command::Experiment(a) => experiment(a),
        Command::Sweep(a) => sweep(a),
        Command::Scaling(a) => scaling(a),
        Command::Diagnose(a) => diagnose(a),
    }
}

fn network_spec(text: &str) -> CliResult<NetworkSpec> {
    if let Ok(spec) = serde_json::from_str::<NetworkSpec>(text) {
        return Ok(spec);
    }
    DcsbmConfig::from_json(text)
        .map(|model| NetworkSpec::Dcsbm { model })
        .map_err(|_| Failure::usage("config is neither a network spec nor a DC-SBM model"))
}

fn generate(a: GenerateArgs) -> CliResult {
    let spec = network_spec(&read_text(&a.config)?)?;
    if matches!(spec, NetworkSpec::EdgeList { .. }) {
        return Err(Failure::usage("generate needs a model, not an edge list"));
    }
    let mut rng = stream(a.seed, Purpose::Network, &[0]);
    let (params, labels) = model_params(&spec, &mut rng)
        .input()?
        .expect("model specs carry parameters");
    let gen = runtime(dcsbm::generate_with(&params, &labels, a.method.into(), &mut rng))?;
    let (graph, labels) = if a.lcc {
        let lcc = largest_connected_component(&gen.graph);
        let l = labels.restrict(&lcc.new_to_old);
        (lcc.graph, l)
    } else {
        (gen.graph, labels)
    };
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Failure::Runtime(Error::Io { path: p, source: e })
    };
    write_edge_list(&graph, create(&a.out)?).map_err(io_err(&a.out))?;
    write_labels(&labels, create(&a.labels_out)?).map_err(io_err(&a.labels_out))?;
    let summary = json!({
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "mean_degree": graph.mean_degree(),
        "block_sizes": labels.block_sizes(),
        "clamped_pairs": gen.clamped_pairs,
        "method": gen.method,
        "components": graph.component_count(),
    });
    emit(None, &pretty(&summary))
}

/// Observed network restricted to its largest component.
struct Observed {
    graph: Graph,
    labels: BlockAssignment,
    new_to_old: Vec<usize>,
    original_node_count: usize,
}

fn load_observed(graph: &Path, labels: &Path) -> CliResult<Observed> {
    let g = load_edge_list(open(graph)?).input()?;
    let l = load_labels(open(labels)?, g.node_count()).input()?;
    let lcc = largest_connected_component(&g);
    Ok(Observed {
        labels: l.restrict(&lcc.new_to_old),
        graph: lcc.graph,
        new_to_old: lcc.new_to_old,
        original_node_count: g.node_count(),
    })
}

fn sample(a: SampleArgs) -> CliResult {
    let obs = load_observed(&a.graph, &a.labels)?;
    let y: Vec<f64> = match &a.values {
        Some(p) => {
            let all = load_values(open(p)?, obs.original_node_count).input()?;
            obs.new_to_old.iter().map(|&old| all[old]).collect()
        }
        None => obs
            .labels
            .labels()
            .iter()
            .map(|&z| f64::from(u8::from(z == 1)))
            .collect(),
    };
    let seed_policy = match a.seed_policy {
        SeedPolicy::Fixed(old) => {
            let new = obs
                .new_to_old
                .binary_search(&old)
                .map_err(|_| Failure::usage(format!("fixed seed {old} is not in the largest component")))?;
            SeedPolicy::Fixed(new)
        }
        p => p,
    };
    let (mode, tree) = match (a.mode, a.complete_tree) {
        (Mode::WithoutReplacement, Some(_)) => {
            return Err(Failure::usage("--complete-tree needs --mode with-replacement"))
        }
        (Mode::WithoutReplacement, None) => (SamplingMode::WithoutReplacement, TreeSpec::Poisson),
        (Mode::WithReplacement, None) => (SamplingMode::WithReplacement, TreeSpec::Poisson),
        (Mode::WithReplacement, Some((arity, levels))) => {
            (SamplingMode::WithReplacement, TreeSpec::Complete { arity, levels })
        }
    };
    let n_target = match (a.n_target, tree) {
        (Some(n), _) => n,
        (None, TreeSpec::Complete { .. }) => 1,
        (None, TreeSpec::Poisson) => return Err(Failure::usage("--n-target is required")),
    };
    let spec = SamplingSpec {
        mode,
        lambda: a.lambda,
        n_target,
        seed_policy,
        max_restarts: a.max_restarts,
        tree,
    };
    let mut rng = stream(a.seed, Purpose::Sample, &[0, 0]);
    let mut s = runtime(draw_sample(&spec, &obs.graph, &y, &obs.labels, &mut rng))?;
    for x in &mut s.nodes {
        *x = obs.new_to_old[*x];
    }
    emit(a.out.as_deref(), &pretty(&s))
}

fn estimate(a: EstimateArgs) -> CliResult {
    let s = RdsSample::from_json(&read_text(&a.sample)?).input()?;
    let ests = match a.estimators {
        Some(list) => {
            if list.contains(&Estimator::Ipw) && a.mean_degree.is_none() {
                return Err(Failure::usage("ipw needs --mean-degree"));
            }
            list
        }
        None => Estimator::ALL
            .into_iter()
            .filter(|&e| e != Estimator::Ipw || a.mean_degree.is_some())
            .collect(),
    };
    if !(a.smoothing.is_finite() && a.smoothing >= 0.0) {
        return Err(Failure::usage("--smoothing must be non-negative"));
    }
    let ctx = EstimatorContext {
        mean_degree: a.mean_degree,
        num_blocks: a.num_blocks,
        smoothing: a.smoothing,
    };
    let results = ests
        .iter()
        .map(|&e| runtime(estimators::evaluate(e, &s, &ctx)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = json!({ "sample_size": s.len(), "estimates": results });
    if ests.contains(&Estimator::Ps) {
        let k = a.num_blocks.or(s.num_blocks).ok_or(Failure::Runtime(Error::MissingLabels))?;
        let ps = runtime(estimators::ps(&s, k, a.smoothing))?;
        out["ps_summary"] = serde_json::to_value(&ps.summary).expect("summary serializes");
    }
    emit(a.out.as_deref(), &pretty(&out))
}

fn load_config(path: &Path, seed: u64) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path).input()?;
    cfg.master_seed = seed;
    Ok(cfg)
}

fn write_experiment(report: &ExperimentReport, out: &OutputArgs) -> CliResult {
    match (&out.out, out.format) {
        (Some(p), Format::Csv) => runtime(write_report(report, p, ReportFormat::Csv)),
        (Some(p), Format::Json) => runtime(write_report(report, p, ReportFormat::Json)),
        (None, Format::Csv) => emit(None, &report.to_csv_string()),
        (None, Format::Json) => emit(None, &format!("{}\n", report.to_json_string())),
    }
}

fn experiment(a: ExperimentArgs) -> CliResult {
    let cfg = load_config(&a.config, a.seed)?;
    let report = runtime(experiments::run(&cfg))?;
    write_experiment(&report, &a.output)
}

fn sweep(a: SweepArgs) -> CliResult {
    let cfg = load_config(&a.config, a.seed)?;
    let report = match (a.axis, a.values) {
        (Some(axis), Some(values)) => {
            let axis = SweepAxis::from(axis);
            for &v in &values {
                cfg.at_axis(axis, v).input()?;
            }
            runtime(experiments::sweep(&cfg, axis, &values))?
        }
        (Some(_), None) => return Err(Failure::usage("--axis needs --values")),
        (None, _) if cfg.sweep.is_none() => {
            return Err(Failure::usage("config has no sweep; pass --axis and --values"))
        }
        (None, _) => runtime(experiments::run(&cfg))?,
    };
    write_experiment(&report, &a.output)
}

fn scaling(a: ScalingArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(p) => ScalingConfig::from_json(&read_text(p)?).input()?,
        None => ScalingConfig::new(a.seed, a.p.ok_or_else(|| Failure::usage("--p or --config is required"))?),
    };
    cfg.master_seed = a.seed;
    if let Some(p) = a.p {
        cfg.p = p;
    }
    if let Some(l) = a.levels {
        cfg.levels = l;
    }
    if let Some(n) = a.nodes {
        cfg.node_count = n;
    }
    if let Some(d) = a.mean_degree {
        cfg.mean_degree = d;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    let report = runtime(experiments::variance_scaling_study(&cfg))?;
    write_scaling(&report, &a.output)
}

fn write_scaling(report: &ScalingReport, out: &OutputArgs) -> CliResult {
    let json_text = pretty(report);
    match (&out.out, out.format) {
        (Some(p), Format::Csv) => {
            let twin = p.with_extension("json");
            if &twin == p {
                return Err(Failure::usage("CSV output needs a name without a .json extension"));
            }
            let file = create(p)?;
            runtime(report.write_csv(file))?;
            emit(Some(&twin), &json_text)
        }
        (Some(p), Format::Json) => emit(Some(p), &json_text),
        (None, Format::Csv) => emit(None, &report.to_csv_string()),
        (None, Format::Json) => emit(None, &json_text),
    }
}

fn diagnose(a: DiagnoseArgs) -> CliResult {
    let cfg = load_config(&a.config, a.seed)?;
    let net = runtime(build_network(&cfg.network, cfg.generation, cfg.master_seed, 0))?;
    let y = runtime(build_outcome(&cfg.outcome, &net, cfg.master_seed, 0))?;

    let (affinity, source, sizes) = match &net.params {
        Some(p) => (p.affinity.clone(), "model", p.block_sizes.clone()),
        None => (
            runtime(empirical_affinity(&net.graph, &net.labels))?,
            "empirical",
            net.labels.block_sizes(),
        ),
    };
    // Empirical blocks can lack edges between them; report that instead of failing.
    let population = population_model(&affinity, &sizes);
    let concentration = transition_concentration(&net.graph, &net.labels, &affinity);

    let mut rng = stream(cfg.master_seed, Purpose::Sample, &[0, 0]);
    let sample = runtime(draw_sample(&cfg.sampling, &net.graph, &y, &net.labels, &mut rng))?;
    let assumptions = net
        .params
        .as_ref()
        .map(|p| check_assumptions(p, &y, &sample.tree, AssumptionThresholds::default()));

    let as_value = |r: rdsps::Result<serde_json::Value>| {
        r.unwrap_or_else(|e| json!({"unavailable": e.to_string()}))
    };
    let report = json!({
        "master_seed": cfg.master_seed,
        "network": {
            "original_node_count": net.original_node_count,
            "lcc_size": net.graph.node_count(),
            "edges": net.graph.edge_count(),
            "mean_degree": net.graph.mean_degree(),
            "block_sizes": net.labels.block_sizes(),
            "clamped_pairs": net.clamped_pairs,
            "generation_method": net.method,
        },
        "affinity_source": source,
        "affinity": affinity,
        "population": as_value(population.map(|p| serde_json::to_value(p).expect("serializes"))),
        "transition_concentration": as_value(concentration.map(|c| serde_json::to_value(c).expect("serializes"))),
        "assumptions": assumptions,
        "sample": {
            "size": sample.len(),
            "restarts": sample.restarts,
            "max_tree_degree": sample.tree.max_degree(),
        },
    });
    emit(a.out.as_deref(), &pretty(&report))
}
