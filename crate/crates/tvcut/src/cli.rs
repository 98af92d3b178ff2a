//! Command-line front end: dataset generation, clustering runs, evaluation,
//! and the verification battery. A clustering run is fully determined by its
//! manifest, which is echoed into the summary JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{load_cloud, purity, save_cloud, two_moons_with, TwoMoonsConfig};
use crate::descent::{init_random, init_spectral, run, write_trace_csv, DescentConfig};
use crate::error::{Error, Result};
use crate::graph::{knn_graph, load_edge_list, write_edge_list, WeightedGraph};
use crate::ratio_cut::{
    ratio_cut_value, read_labels, threshold_cluster, threshold_cluster_sweep, write_labels,
    Partition,
};
use crate::verify::{run_battery, BatteryConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tvcut",
    version,
    about = "Two-way graph clustering via total-variation ratio-cut descent"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a two-moons dataset CSV (coordinates plus a 0/1 label column).
    Generate(GenerateArgs),
    /// Build a similarity graph and run the descent clustering.
    Cluster(ClusterArgs),
    /// Compare a labels file against a truth file.
    Evaluate(EvaluateArgs),
    /// Run the verification battery and report pass/fail per property.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_per_moon: u64,
    /// Ambient dimension (at least 2).
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    /// Gaussian noise deviation.
    #[arg(long, default_value_t = 0.015)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the ground-truth labels, one 0/1 per line.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
    /// Sample angles on a regular grid instead of uniformly at random.
    #[arg(long)]
    pub equispaced: bool,
    /// Add noise only to the two planar coordinates.
    #[arg(long)]
    pub planar_noise: bool,
}

#[derive(Debug, Args, Clone)]
pub struct ClusterArgs {
    /// Points CSV input; builds a kNN graph.
    #[arg(long = "in", conflicts_with = "graph")]
    pub input: Option<PathBuf>,
    /// The points CSV carries a trailing 0/1 truth column.
    #[arg(long)]
    pub labeled: bool,
    /// Edge-list input; uses the given graph directly.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Nearest-neighbor count for graph construction.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Which neighbor sets the self-tuning bandwidth.
    #[arg(long = "self-tune", default_value_t = 7)]
    pub self_tune: usize,
    /// Universal scale in the self-tuning weights.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = InitMode::Random)]
    pub init: InitMode,
    /// Step constant of the descent.
    #[arg(long, default_value_t = 0.25)]
    pub c: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub outer_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_outer_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub inner_max_iter: usize,
    /// Verify the descent estimates at every iteration.
    #[arg(long)]
    pub check_lemmas: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ThresholdMode::Zero)]
    pub threshold: ThresholdMode,
    /// Prefix for the output files (.labels, .fstar, .trace.csv, .summary.json).
    #[arg(long)]
    pub out_prefix: Option<String>,
    /// Export the graph that was clustered as an edge list.
    #[arg(long)]
    pub save_graph: Option<PathBuf>,
    /// Proceed when the graph is disconnected instead of erroring. The
    /// descent then bottoms out at a zero-energy component split.
    #[arg(long)]
    pub allow_disconnected: bool,
    /// Load the whole run configuration from a manifest file, ignoring the
    /// other flags.
    #[arg(long, conflicts_with_all = ["input", "graph", "out_prefix"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EvaluateArgs {
    /// Predicted labels, one 0/1 per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Ground-truth labels, one 0/1 per line.
    #[arg(long)]
    pub truth: PathBuf,
    /// Optional edge list; when given, the discrete ratio cut of the
    /// predicted labels is reported too.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct VerifyArgs {
    /// Run the battery over seeds 0..num-seeds.
    #[arg(long, default_value_t = 10)]
    pub num_seeds: u64,
    /// Enumeration bound for the tightness checks.
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Inner prox tolerance for the descent-inequality runs.
    #[arg(long, default_value_t = 1e-10)]
    pub inner_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Random,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Split at zero.
    Zero,
    /// Pick the ratio-cut-minimizing threshold.
    Sweep,
}

/// Dataset source of a clustering run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    Points { path: PathBuf, labeled: bool },
    EdgeList { path: PathBuf },
}

/// Everything that determines a clustering run. Serializable, human
/// readable, echoed into the summary JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub input: InputSpec,
    pub k: usize,
    pub self_tune_m: usize,
    pub universal_scale: f64,
    pub init: InitMode,
    pub threshold: ThresholdMode,
    pub c: f64,
    pub outer_tol: f64,
    pub max_outer_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub check_lemmas: bool,
    pub seed: u64,
    pub out_prefix: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub save_graph: Option<PathBuf>,
    #[serde(default)]
    pub allow_disconnected: bool,
}

impl RunManifest {
    fn descent_config(&self) -> DescentConfig {
        DescentConfig {
            c: self.c,
            outer_tol: self.outer_tol,
            max_outer_iter: self.max_outer_iter,
            inner_tol: self.inner_tol,
            inner_max_iter: self.inner_max_iter,
            check_lemmas: self.check_lemmas,
            seed: self.seed,
        }
    }
}

/// Summary JSON written next to the run outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub critical_residual: f64,
    pub ratio_cut: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub purity: Option<f64>,
    pub manifest: RunManifest,
}

/// Parse and dispatch; returns the process exit code (0 success, 1 usage or
/// IO, 2 numerical failure, 3 non-convergence).
pub fn dispatch(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(&args).map(|()| 0),
        Command::Cluster(args) => cmd_cluster(&args).map(|s| if s.converged { 0 } else { 3 }),
        Command::Evaluate(args) => cmd_evaluate(&args).map(|()| 0),
        Command::Verify(args) => Ok(if cmd_verify(&args) { 0 } else { 2 }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Write the two-moons CSV (and optional truth file), echoing the manifest
/// to stdout.
pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let cfg = TwoMoonsConfig {
        n_per_moon: args.n_per_moon as usize,
        ambient_dim: args.dim,
        sigma: args.sigma,
        seed: args.seed,
        equispaced_angles: args.equispaced,
        planar_noise: args.planar_noise,
    };
    let lc = two_moons_with(&cfg)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    save_cloud(&lc.cloud, Some(&lc.truth), &mut out)?;
    out.flush()?;
    if let Some(truth_path) = &args.truth_out {
        let mut tw = BufWriter::new(File::create(truth_path)?);
        write_labels(&lc.truth, &mut tw)?;
        tw.flush()?;
    }
    println!(
        "{}",
        serde_json::json!({
            "n_per_moon": cfg.n_per_moon,
            "ambient_dim": cfg.ambient_dim,
            "sigma": cfg.sigma,
            "seed": cfg.seed,
            "equispaced_angles": cfg.equispaced_angles,
            "planar_noise": cfg.planar_noise,
            "out": args.out,
            "truth_out": args.truth_out,
        })
    );
    Ok(())
}

fn manifest_from_args(args: &ClusterArgs) -> Result<RunManifest> {
    let input = match (&args.input, &args.graph) {
        (Some(p), None) => InputSpec::Points {
            path: p.clone(),
            labeled: args.labeled,
        },
        (None, Some(p)) => InputSpec::EdgeList { path: p.clone() },
        _ => {
            return Err(Error::InvalidParameter(
                "exactly one of --in or --graph is required".into(),
            ))
        }
    };
    let out_prefix = args
        .out_prefix
        .clone()
        .ok_or_else(|| Error::InvalidParameter("--out-prefix is required".into()))?;
    Ok(RunManifest {
        input,
        k: args.k,
        self_tune_m: args.self_tune,
        universal_scale: args.scale,
        init: args.init,
        threshold: args.threshold,
        c: args.c,
        outer_tol: args.outer_tol,
        max_outer_iter: args.max_outer_iter,
        inner_tol: args.inner_tol,
        inner_max_iter: args.inner_max_iter,
        check_lemmas: args.check_lemmas,
        seed: args.seed,
        out_prefix,
        save_graph: args.save_graph.clone(),
        allow_disconnected: args.allow_disconnected,
    })
}

/// Load data, build or read the graph, run the descent, and write the
/// labels, signal, trace, and summary files. Partial outputs are still
/// written when the run stops at the iteration budget.
pub fn cmd_cluster(args: &ClusterArgs) -> Result<RunSummary> {
    let manifest = match &args.manifest {
        Some(path) => read_manifest(path)?,
        None => manifest_from_args(args)?,
    };
    run_from_manifest(&manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("manifest: {e}"),
    })
}

/// Execute a clustering run exactly as described by its manifest.
pub fn run_from_manifest(manifest: &RunManifest) -> Result<RunSummary> {
    let (graph, truth) = match &manifest.input {
        InputSpec::Points { path, labeled } => {
            let reader = BufReader::new(File::open(path)?);
            let (cloud, truth) = load_cloud(reader, *labeled)?;
            let g = knn_graph(
                &cloud,
                manifest.k,
                manifest.self_tune_m,
                manifest.universal_scale,
            )?;
            (g, truth)
        }
        InputSpec::EdgeList { path } => {
            let reader = BufReader::new(File::open(path)?);
            (load_edge_list(reader)?, None)
        }
    };

    if !manifest.allow_disconnected && !graph.is_connected() {
        return Err(Error::Disconnected {
            components: graph.connected_components(),
        });
    }
    if let Some(path) = &manifest.save_graph {
        let mut w = BufWriter::new(File::create(path)?);
        write_edge_list(&graph, &mut w)?;
        w.flush()?;
    }

    let f0 = match manifest.init {
        InitMode::Random => init_random(graph.n(), manifest.seed)?,
        InitMode::Spectral => init_spectral(&graph)?,
    };
    let result = run(&graph, &f0, &manifest.descent_config())?;

    let partition = match manifest.threshold {
        ThresholdMode::Zero => threshold_cluster(&result.f_star)?,
        ThresholdMode::Sweep => threshold_cluster_sweep(&graph, &result.f_star)?,
    };
    let rc = ratio_cut_value(&graph, &partition)?;
    let pur = match &truth {
        Some(t) => Some(purity(&partition, t)?),
        None => None,
    };
    let final_energy = result.trace.last().map(|r| r.energy).unwrap_or(f64::NAN);

    let prefix = &manifest.out_prefix;
    let mut lw = BufWriter::new(File::create(format!("{prefix}.labels"))?);
    write_labels(partition.labels(), &mut lw)?;
    lw.flush()?;

    let mut fw = BufWriter::new(File::create(format!("{prefix}.fstar"))?);
    for x in result.f_star.iter() {
        writeln!(fw, "{x}")?;
    }
    fw.flush()?;

    let mut tw = BufWriter::new(File::create(format!("{prefix}.trace.csv"))?);
    write_trace_csv(&result.trace, &mut tw)?;
    tw.flush()?;

    let summary = RunSummary {
        final_energy,
        iterations: result.trace.len(),
        converged: result.converged,
        critical_residual: result.critical_residual,
        ratio_cut: rc,
        purity: pur,
        manifest: manifest.clone(),
    };
    let mut sw = BufWriter::new(File::create(format!("{prefix}.summary.json"))?);
    serde_json::to_writer_pretty(&mut sw, &summary)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(sw)?;
    sw.flush()?;

    Ok(summary)
}

/// Print purity (and, with a graph, the discrete ratio cut) of a labels
/// file against a truth file.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let predicted = read_labels(BufReader::new(File::open(&args.labels)?))?;
    let truth = read_labels(BufReader::new(File::open(&args.truth)?))?;
    let partition = Partition::new(predicted)?;
    let p = purity(&partition, &truth)?;
    println!("purity {p}");
    if let Some(path) = &args.graph {
        let graph: WeightedGraph = load_edge_list(BufReader::new(File::open(path)?))?;
        let rc = ratio_cut_value(&graph, &partition)?;
        println!("ratio_cut {rc}");
    }
    Ok(())
}

/// Run the battery, print one line per check, and return overall success.
pub fn cmd_verify(args: &VerifyArgs) -> bool {
    let cfg = BatteryConfig {
        seeds: (0..args.num_seeds).collect(),
        n_max: args.n_max,
        inner_tol: args.inner_tol,
    };
    let outcomes = run_battery(&cfg);
    let mut all = true;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("check {}: {} ({})", o.name, status, o.detail);
        all &= o.passed;
    }
    all
}
