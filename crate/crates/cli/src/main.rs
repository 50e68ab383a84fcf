use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dwt_core::analytics::{cover_map, find_accumulations, moment_bound_check, write_accumulations_csv, BoundCheckRequest, PsiWindow};
use dwt_core::branching::{coupled_run, simulate_branching, CoupledOptions, DEFAULT_NODE_CAP};
use dwt_core::harness::{analyze_csv, emit, resolve_threads, run_experiment, suite_names, verify, ExperimentConfig};
use dwt_core::sim::{grow_profile, grow_tree, trace_checkpoints_csv, tree_edges_csv, GrowOptions};
use dwt_core::{DwtError, WeightSpec};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "dwt", version, about = "Depth-weighted random trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and dump its trace.
    Simulate(SimulateArgs),
    /// Run an experiment described by a JSON config.
    Experiment(ExperimentArgs),
    /// Run a verification suite (or `all`).
    Verify(VerifyArgs),
    /// Fit beta and nu from an experiment CSV, or run a moment bound check.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Profile,
    Tree,
    Branching,
    Coupled,
}

#[derive(Args)]
struct SimulateArgs {
    /// Weight spec as inline JSON or a path to a JSON file.
    #[arg(long)]
    spec: String,
    #[arg(long, value_enum, default_value = "profile")]
    mode: Mode,
    /// Number of vertices (profile and tree modes).
    #[arg(short, long)]
    n: Option<u64>,
    /// Time horizon (branching mode).
    #[arg(long)]
    t_max: Option<f64>,
    /// Depth to reach (coupled mode).
    #[arg(long)]
    depth_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
    /// Track the continuous-time clock.
    #[arg(long)]
    clock: bool,
    /// Comma-separated checkpoint sizes.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<u64>,
    /// Also write accumulation events and the cover map of the final profile.
    #[arg(long)]
    cover: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; defaults to the config's `out_dir`, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Experiment CSV, or a bound-check request with `--moments`.
    input: PathBuf,
    /// Treat the input as a moment bound-check request.
    #[arg(long)]
    moments: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Input for `analyze --moments`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentRequest {
    spec: WeightSpec,
    #[serde(flatten)]
    request: BoundCheckRequest,
    #[serde(default = "default_mc_samples")]
    samples: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_tail_tol")]
    tail_tol: f64,
}

fn default_mc_samples() -> u64 {
    100_000
}

fn default_tail_tol() -> f64 {
    1e-12
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    DwtError::Config(msg.into()).into()
}

fn read_spec(arg: &str) -> Result<WeightSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| config_error(format!("reading spec {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| config_error(format!("weight spec: {e}")))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let spec = read_spec(&args.spec)?;
    fs::create_dir_all(&args.out)?;
    let need_n = || args.n.ok_or_else(|| config_error("--n is required for this mode"));
    let opts = GrowOptions {
        track_tau: args.clock,
        track_first_passage: args.clock,
        checkpoints: args.checkpoints.clone(),
        ..GrowOptions::default()
    };
    let profile = match args.mode {
        Mode::Profile | Mode::Tree => {
            let trace = if matches!(args.mode, Mode::Tree) {
                let (tree, trace) = grow_tree(&spec, need_n()?, args.seed, &opts)?;
                let mut w = create(&args.out, "edges.csv")?;
                tree_edges_csv(&tree, &mut w)?;
                w.flush()?;
                trace
            } else {
                grow_profile(&spec, need_n()?, args.seed, &opts)?
            };
            write_json(&trace, Some(&args.out.join("trace.json")))?;
            let mut w = create(&args.out, "checkpoints.csv")?;
            trace_checkpoints_csv(&trace, &mut w)?;
            w.flush()?;
            println!("n={} depth={} z={}", trace.n, trace.final_depth, trace.z_n);
            trace.profile
        }
        Mode::Branching => {
            let t_max = args.t_max.ok_or_else(|| config_error("--t-max is required for branching mode"))?;
            let run = simulate_branching(&spec, t_max, args.node_cap, args.seed)?;
            let mut w = create(&args.out, "births.csv")?;
            run.write_csv(&mut w)?;
            w.flush()?;
            println!("births={} truncated={}", run.events.len(), run.truncated);
            run.profile()
        }
        Mode::Coupled => {
            let depth_max = args.depth_max.ok_or_else(|| config_error("--depth-max is required for coupled mode"))?;
            let run = coupled_run(&spec, depth_max, args.seed, &CoupledOptions::default())?;
            write_json(&run, Some(&args.out.join("coupled.json")))?;
            let mut w = create(&args.out, "checkpoints.csv")?;
            trace_checkpoints_csv(&run.trace, &mut w)?;
            w.flush()?;
            println!("n={} depth={} h_sum={}", run.trace.n, run.trace.final_depth, run.h_sum());
            run.trace.profile.clone()
        }
    };
    if args.cover {
        let windows = PsiWindow::new(&spec);
        let events = find_accumulations(&profile, &windows)?;
        let mut w = create(&args.out, "accumulations.csv")?;
        write_accumulations_csv(&events, &mut w)?;
        w.flush()?;
        let map = cover_map(&profile, &windows, profile.len() - 1)?;
        let mut w = create(&args.out, "cover.csv")?;
        map.write_csv(&profile, &mut w)?;
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| config_error(format!("reading {}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| config_error(e.to_string()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    let out = args.out.or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let manifest = run_experiment(&config)?;
    let (csv, json) = emit(&manifest, &out)?;
    println!("wrote {} and {}", csv.display(), json.display());
    match &manifest.verification {
        Some(report) if !report.passed => Ok(ExitCode::from(1)),
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    if args.suite != "all" && !suite_names().contains(&args.suite.as_str()) {
        return Err(config_error(format!("unknown suite {}; expected one of {:?} or all", args.suite, suite_names())));
    }
    let report = verify(&args.suite, args.seed, resolve_threads(args.threads))?;
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: observed {} bound {} ({})", c.name, c.observed, c.bound, c.detail);
    }
    if let Some(path) = &args.out {
        write_json(&report, Some(path))?;
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let file = File::open(&args.input).map_err(|e| config_error(format!("opening {}: {e}", args.input.display())))?;
    if args.moments {
        let mut req: MomentRequest =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| config_error(format!("bound-check request: {e}")))?;
        req.seed = args.seed.unwrap_or(req.seed);
        req.samples = args.samples.unwrap_or(req.samples);
        let report = moment_bound_check(&req.spec, &req.request, req.samples, req.seed, req.tail_tol)?;
        write_json(&report, args.out.as_deref())?;
    } else {
        let analysis = analyze_csv(BufReader::new(file))?;
        write_json(&analysis, args.out.as_deref())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Experiment(a) => experiment(a),
        Command::Verify(a) => run_verify(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<DwtError>() {
                Some(
                    DwtError::Config(_)
                    | DwtError::Json(_)
                    | DwtError::Domain(_)
                    | DwtError::UnboundedWindow { .. }
                    | DwtError::ToleranceUnreachable { .. },
                ) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
