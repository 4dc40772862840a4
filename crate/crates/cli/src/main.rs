use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use spvote_cli::commands::{
    AggregateConfig, EstimateConfig, EvaluateConfig, ReportConfig, SimulateConfig, SweepConfig, VerifyTheoryConfig,
};
use spvote_cli::{execute, read_manifest, replay, resolve, CmdResult, Command, Fail, Method};
use spvote_core::{ElicitationFormat, Rule};

/// Surprisingly Popular rank aggregation from partial votes and predictions.
///
/// Every command writes its outputs and a manifest.json into --out. Settings
/// come from flags, then --config (JSON), then built-in defaults; the
/// SPVOTE_SEED environment variable sets the default seed.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error, 4 unsupported
/// request (guard or rule/format capability).
#[derive(Parser)]
#[command(name = "spvote", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Serialize)]
struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw synthetic ballots from the concentric Mallows mixture.
    Simulate(SimulateArgs),
    /// Aggregate a ballot file into a full ranking.
    Aggregate(AggregateArgs),
    /// Score predicted rankings against the truth with bootstrap intervals.
    Evaluate(EvaluateArgs),
    /// Fit the mixture parameters to rank-rank ballots by grid search.
    Estimate(EstimateArgs),
    /// Check the recovery conditions and sample bound on small exact instances.
    VerifyTheory(VerifyTheoryArgs),
    /// Multi-seed, multi-format simulate + aggregate + evaluate.
    Sweep(SweepArgs),
    /// Collect metric CSVs under a directory into one long table.
    Report(ReportArgs),
    /// Re-run a command from its manifest.json.
    Replay(ReplayArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    /// Ballots per subset.
    #[arg(long)]
    n: Option<usize>,
    /// Format tag, or a comma-separated list with one tag per subset.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<ElicitationFormat>>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    phi_e_votes: Option<f64>,
    #[arg(long)]
    phi_e_predictions: Option<f64>,
    #[arg(long)]
    phi_ne_votes: Option<f64>,
    #[arg(long)]
    phi_ne_predictions: Option<f64>,
    /// Draw mixture parameters from the generation prior.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    prior: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct AggregateArgs {
    /// JSON-Lines ballot file.
    #[arg(long)]
    ballots: Option<PathBuf>,
    /// Plan file; defaults to plan.json beside the ballots.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// borda | copeland | maximin | schulze | partial-sp | aggregated-sp
    #[arg(long)]
    method: Option<Method>,
    /// Inner voting rule of the SP methods.
    #[arg(long)]
    rule: Option<Rule>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Pseudo-count of the conditional estimates (0 disables smoothing).
    #[arg(long)]
    smoothing: Option<f64>,
    /// Tie-breaking seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Predicted ranking file(s).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pred: Option<Vec<PathBuf>>,
    /// Ground-truth ranking file(s): one, or one per prediction.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    truth: Option<Vec<PathBuf>>,
    /// Metrics to keep (kendall_tau, spearman_rho, pairwise_hit_rate, top_t_hit_rate).
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Bootstrap resamples (at least 100).
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    run_id: Option<String>,
    /// Method label copied into the output.
    #[arg(long)]
    method: Option<String>,
    /// Format label copied into the output.
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[arg(long)]
    ballots: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Maximize likelihood times prior (MAP) instead of likelihood alone.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    priors: bool,
    /// Fit raw rather than normalized Kendall distances.
    #[arg(long)]
    #[serde(skip)]
    raw_distances: bool,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    phi_max: Option<f64>,
    #[arg(long)]
    coarse_stride: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct VerifyTheoryArgs {
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    phi_e: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    phi_ne: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Recovery trials per passing point (0 skips the simulation).
    #[arg(long)]
    trials: Option<usize>,
    /// Skip the simulation where the bound exceeds this many voters.
    #[arg(long)]
    max_n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<ElicitationFormat>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    rule: Option<Rule>,
    #[arg(long)]
    runs: Option<usize>,
    /// First seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    phi_e_votes: Option<f64>,
    #[arg(long)]
    phi_e_predictions: Option<f64>,
    #[arg(long)]
    phi_ne_votes: Option<f64>,
    #[arg(long)]
    phi_ne_predictions: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    resamples: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args, Serialize)]
struct ReportArgs {
    /// Run directory holding evaluate or sweep outputs.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn run<C: Command>(args: &impl Serialize, common: &Common) -> CmdResult {
    let flags = serde_json::to_value(args).expect("flags serialize");
    let cfg: C = resolve(common.config.as_deref(), flags)?;
    execute(&cfg, &common.out)
}

fn replay_manifest(path: &Path, out: &Path) -> CmdResult {
    let manifest = read_manifest(path)?;
    match manifest.command.as_str() {
        SimulateConfig::NAME => replay::<SimulateConfig>(&manifest, out),
        AggregateConfig::NAME => replay::<AggregateConfig>(&manifest, out),
        EvaluateConfig::NAME => replay::<EvaluateConfig>(&manifest, out),
        EstimateConfig::NAME => replay::<EstimateConfig>(&manifest, out),
        VerifyTheoryConfig::NAME => replay::<VerifyTheoryConfig>(&manifest, out),
        SweepConfig::NAME => replay::<SweepConfig>(&manifest, out),
        ReportConfig::NAME => replay::<ReportConfig>(&manifest, out),
        other => Err(Fail::config(anyhow::anyhow!("manifest names unknown command '{other}'"))),
    }
}

fn dispatch(cmd: Cmd) -> CmdResult {
    match cmd {
        Cmd::Simulate(a) => run::<SimulateConfig>(&a, &a.common),
        Cmd::Aggregate(a) => run::<AggregateConfig>(&a, &a.common),
        Cmd::Evaluate(a) => run::<EvaluateConfig>(&a, &a.common),
        Cmd::Estimate(a) => {
            let mut flags = serde_json::to_value(&a).expect("flags serialize");
            if a.raw_distances {
                flags["normalize"] = false.into();
            }
            let cfg: EstimateConfig = resolve(a.common.config.as_deref(), flags)?;
            execute(&cfg, &a.common.out)
        }
        Cmd::VerifyTheory(a) => run::<VerifyTheoryConfig>(&a, &a.common),
        Cmd::Sweep(a) => run::<SweepConfig>(&a, &a.common),
        Cmd::Report(a) => run::<ReportConfig>(&a, &a.common),
        Cmd::Replay(a) => replay_manifest(&a.manifest, &a.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
