use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use verisynth::optim::ScpConfig;

#[derive(Debug, Parser)]
#[command(name = "verisynth", version, about = "Model checking, robust policy synthesis and perception-aware planning")]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// Directory for report and artifact files (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a specification, optionally under a fixed policy.
    Check(CheckArgs),
    /// Synthesise a policy, controller or parameter instantiation.
    Synth(SynthArgs),
    /// Sample instantiations of a parametric model and bound the violation probability.
    Scenario(ScenarioArgs),
    /// Run perception–planning episodes and summarise them per variant.
    Plan(PlanArgs),
    /// Write a benchmark model.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// e.g. `reach >= 0.85 {s6}` or `cost <= 4 {goal}`.
    #[arg(long)]
    pub spec: String,
    /// Policy or controller JSON to evaluate instead of optimising.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthMode {
    Dual,
    ParamScp,
    RobustFsc,
}

#[derive(Debug, Args)]
pub struct ScpArgs {
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub eps_graph: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl ScpArgs {
    pub fn config(&self) -> ScpConfig {
        let d = ScpConfig::default();
        ScpConfig {
            delta0: self.delta0.unwrap_or(d.delta0),
            gamma: self.gamma.unwrap_or(d.gamma),
            omega: self.omega.unwrap_or(d.omega),
            tau: self.tau.unwrap_or(d.tau),
            eps_graph: self.eps_graph.unwrap_or(d.eps_graph),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            ..d
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub mode: SynthMode,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub spec: String,
    /// Memory nodes of the controller (robust-fsc).
    #[arg(long, default_value_t = 2)]
    pub k_memory: usize,
    #[command(flatten)]
    pub scp: ScpArgs,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Parametric model (JSON with a `parameters` block).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub spec: String,
    /// Number of sampled instantiations K.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Tolerance ν to report the confidence bound for.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Confidence target α; the matching tolerance is found by bisection.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub eps_graph: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Instance directory written by `generate reach-avoid`.
    #[arg(long, conflicts_with_all = ["grid", "model"])]
    pub instance: Vec<PathBuf>,
    /// Generate reach-avoid grids of this size on the fly.
    #[arg(long, conflicts_with = "model")]
    pub grid: Option<usize>,
    /// Obstacles per generated grid.
    #[arg(long, default_value_t = 8)]
    pub obstacles: usize,
    /// Number of generated grids (seeds `seed`, `seed + 1`, …).
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
    /// MDP of an explicit instance; needs --dfa, --truth, --prior and --sensor.
    #[arg(long, requires_all = ["dfa", "truth", "prior", "sensor"])]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dfa: Option<PathBuf>,
    /// True labels: one array of propositions per state.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Prior belief: `{"props": [...], "p": [[...], ...]}`.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Sensor: `{"kind": "distance", ...}` or `{"kind": "constant", "tpr": .., "fpr": ..}`.
    #[arg(long)]
    pub sensor: Option<PathBuf>,
    /// `no-perception`, `always-replan`, `divergence`, `active` or `all`.
    #[arg(long, default_value = "all")]
    pub variant: String,
    #[arg(long, default_value_t = 50)]
    pub episodes: usize,
    #[arg(long)]
    pub gamma_d: Option<f64>,
    #[arg(long)]
    pub gamma_r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub risk_samples: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchmarkKind {
    Grid,
    Maze,
    Navigation,
    ReachAvoid,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: BenchmarkKind,
    /// Size parameter c (≥ 1).
    #[arg(long)]
    pub size: usize,
    /// Obstacles (reach-avoid only).
    #[arg(long, default_value_t = 8)]
    pub obstacles: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
