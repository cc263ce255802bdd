//! Configuration loading, figure presets, artifact writers and command
//! dispatch for the `cpr-lab` binary.

use clap::{Args, Parser, Subcommand};
use cpr_core::control::{
    regime, saddle_point, simulate_optimal, sustainability_check, synthesize_feedback, OcpParams,
    Regime,
};
use cpr_core::equilibrium::{
    comparative_statics_dual, equilibrium_dual, equilibrium_numerical, equilibrium_single,
    equilibrium_star, equilibrium_well_mixed, EquilibriumReport,
};
use cpr_core::game::{
    build_discrete_game, sweep_continuous, sweep_discrete, ContinuousGame, DiscreteThresholds,
};
use cpr_core::learning::{
    learning_equilibrium, learning_stability, simulate_learning, LearningParams, LearningState,
};
use cpr_core::model::{
    complete_weights, integrate_sampled, ConvergenceSpec, ModelParams, StepControl, SystemState,
};
use cpr_core::network::{
    aggregate_approximate, aggregate_exact, aggregate_self_directed, classify_network,
    laplacian_spectrum, InfluenceNetwork, NetworkFile, Partition, CLASSIFY_TOL,
};
use cpr_core::stability::{
    classify_single, global_single, lyapunov_dual, routh_dual, routh_grid, stability_oracle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// bad invocation or malformed configuration: exit code 2
    #[error("{0}")]
    Usage(String),
    /// domain or numerical failure: exit code 1
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "cpr-lab",
    about = "Simulation and analysis lab for coupled resource-consumption dynamics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for artifacts (relative paths land here)
    #[arg(long, global = true, env = "CPR_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed for randomized constructions
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the n-agent system and export the trajectory as CSV
    Simulate(SimulateArgs),
    /// Closed-form or numerical equilibrium report as JSON
    Equilibrium(EquilibriumArgs),
    /// Local/global stability reports and optional grid scans
    Stability(StabilityArgs),
    /// Network classification and block-model aggregation
    Aggregate(AggregateArgs),
    /// Optimal-consumption synthesis and closed-loop simulation
    Ocp(OcpArgs),
    /// Continuous or discrete consumption-game analysis
    Game(GameArgs),
    /// Best-response learning dynamics
    Learn(LearnArgs),
    /// Grid sweeps reproducing the figure data layers
    Sweep(SweepArgs),
}

// ---------------------------------------------------------------------------
// Model specification shared by configs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// one of: single, dyad, well_mixed, star, custom
    pub topology: String,
    pub b: Vec<f64>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    pub rho: Vec<f64>,
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
}

impl ModelSpec {
    pub fn to_params(&self) -> Result<ModelParams, CliError> {
        let alpha = match (&self.alpha, &self.nu) {
            (Some(a), None) => a.clone(),
            (None, Some(nu)) => nu.iter().map(|v| 1.0 - v).collect(),
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("give either alpha or nu, not both".into()))
            }
            (None, None) => return Err(CliError::Usage("model needs alpha or nu".into())),
        };
        let b = self.b.clone();
        let rho = self.rho.clone();
        match self.topology.as_str() {
            "single" => ModelParams::single(
                *b.first()
                    .ok_or_else(|| CliError::Usage("b is empty".into()))?,
                alpha[0],
                rho[0],
            )
            .map_err(usage),
            "dyad" => {
                if b.len() != 2 {
                    return Err(CliError::Usage("dyad needs exactly two agents".into()));
                }
                ModelParams::dyad([b[0], b[1]], [alpha[0], alpha[1]], [rho[0], rho[1]])
                    .map_err(usage)
            }
            "well_mixed" => ModelParams::well_mixed(b, alpha, rho).map_err(usage),
            "star" => ModelParams::star(b, alpha, rho).map_err(usage),
            "custom" => {
                let w = self.weights.clone().ok_or_else(|| {
                    CliError::Usage("custom topology needs a weight matrix".into())
                })?;
                ModelParams::new(b, alpha, rho, w).map_err(usage)
            }
            other => Err(CliError::Usage(format!("unknown topology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub x: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelSpec,
    pub init: InitSpec,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_t_end() -> f64 {
    100.0
}
fn default_dt() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub model: ModelSpec,
    /// start for the numerical fallback on custom topologies
    #[serde(default)]
    pub init: Option<InitSpec>,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named parameter preset (see `sweep --figure help` for the catalogue)
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Also scan the social-relevance square on an N x N grid (dyad only)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Simulation cross-check trials around the equilibrium
    #[arg(long)]
    pub oracle_trials: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Network description JSON (nodes + edges)
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Built-in heterogeneous self-directed instance (100 agents)
    #[arg(long)]
    pub preset: Option<String>,
    /// classify | exact | lumped | approx
    #[arg(long, default_value = "classify")]
    pub mode: String,
    /// Groups as semicolon-separated index lists, e.g. "0,1,2;3,4,5"
    #[arg(long)]
    pub partition: Option<String>,
    /// Surrogate responsiveness for approx mode
    #[arg(long)]
    pub ba: Option<f64>,
    /// Surrogate setpoint for approx mode
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OcpArgs {
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 400)]
    pub nodes: usize,
    #[arg(long)]
    pub preset: Option<String>,
    /// Feedback-law table CSV
    #[arg(long)]
    pub law_out: Option<PathBuf>,
    /// Closed-loop trajectory CSV
    #[arg(long)]
    pub traj_out: Option<PathBuf>,
    /// Regime report JSON
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GameArgs {
    #[arg(long)]
    pub nu1: Option<f64>,
    #[arg(long)]
    pub nu2: Option<f64>,
    /// Analyze the two-strategy threshold game instead
    #[arg(long)]
    pub discrete: bool,
    #[arg(long)]
    pub rho_low: Option<f64>,
    #[arg(long)]
    pub rho_high: Option<f64>,
    #[arg(long)]
    pub nu_low: Option<f64>,
    #[arg(long)]
    pub nu_high: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub nu1: Option<f64>,
    #[arg(long)]
    pub nu2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub b1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y2: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rho1: f64,
    #[arg(long, default_value_t = 0.2)]
    pub rho2: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// game-a..game-e | disc-type | disc-trag | disc-res | stab-2 | help
    #[arg(long)]
    pub figure: String,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    pub command: &'static str,
}

/// Catalogue of named parameter presets matching the reference figures.
pub fn figure_recipes() -> Vec<Recipe> {
    vec![
        Recipe {
            name: "single-node",
            description: "single agent, monotone approach (b=0.1, alpha=0.5, rho=0.5)",
            command: "simulate --preset single-node",
        },
        Recipe {
            name: "single-spiral",
            description: "single agent, decaying oscillation (b=1, alpha=0.5, rho=0.5)",
            command: "simulate --preset single-spiral",
        },
        Recipe {
            name: "single-degenerate",
            description: "single agent, repeated-root boundary (b=0.5, alpha=0.25, rho=0.5)",
            command: "simulate --preset single-degenerate",
        },
        Recipe {
            name: "two-agent-nominal",
            description: "nominal two-community run (nu=(0.75,0.25), rho=(0.75,0.25))",
            command: "simulate --preset two-agent-nominal",
        },
        Recipe {
            name: "limit-cycle",
            description: "cycling dyad (b=(0.2,0.1), nu=(0.01,0.9), rho=(0.001,0.1))",
            command: "simulate --preset limit-cycle",
        },
        Recipe {
            name: "aggregation-demo",
            description: "100-agent self-directed population with random relevances",
            command: "aggregate --preset aggregation-demo --mode approx",
        },
        Recipe {
            name: "ocp-sustainable",
            description: "light discounting delta = 0.01 from x0 = 0.1",
            command: "ocp --preset ocp-sustainable",
        },
        Recipe {
            name: "ocp-unsustainable",
            description: "heavy discounting delta = 10",
            command: "ocp --preset ocp-unsustainable",
        },
        Recipe {
            name: "learning-identical",
            description: "learning run with identical groups (nu = 0.5 both)",
            command: "learn --preset learning-identical",
        },
        Recipe {
            name: "learning-mixed",
            description: "learning run with nu = (0.75, 0.25)",
            command: "learn --preset learning-mixed",
        },
    ]
}

fn simulate_preset(name: &str) -> Result<SimulateConfig, CliError> {
    let spec = |topology: &str, b: Vec<f64>, nu: Vec<f64>, rho: Vec<f64>| ModelSpec {
        topology: topology.into(),
        b,
        alpha: None,
        nu: Some(nu),
        rho,
        weights: None,
    };
    let cfg = match name {
        "single-node" => SimulateConfig {
            model: spec("single", vec![0.1], vec![0.5], vec![0.5]),
            init: InitSpec {
                x: 0.1,
                y: vec![0.0],
            },
            t_end: 150.0,
            dt: 0.25,
            out: None,
        },
        "single-spiral" => SimulateConfig {
            model: spec("single", vec![1.0], vec![0.5], vec![0.5]),
            init: InitSpec {
                x: 0.1,
                y: vec![0.0],
            },
            t_end: 150.0,
            dt: 0.25,
            out: None,
        },
        "single-degenerate" => SimulateConfig {
            model: spec("single", vec![0.5], vec![0.75], vec![0.5]),
            init: InitSpec {
                x: 0.1,
                y: vec![0.0],
            },
            t_end: 150.0,
            dt: 0.25,
            out: None,
        },
        "two-agent-nominal" => SimulateConfig {
            model: spec("dyad", vec![1.0, 1.0], vec![0.75, 0.25], vec![0.75, 0.25]),
            init: InitSpec {
                x: 0.5,
                y: vec![0.0, 0.0],
            },
            t_end: 100.0,
            dt: 0.25,
            out: None,
        },
        "limit-cycle" => SimulateConfig {
            model: spec("dyad", vec![0.2, 0.1], vec![0.01, 0.9], vec![0.001, 0.1]),
            init: InitSpec {
                x: 0.001,
                y: vec![0.5, 0.5],
            },
            t_end: 5000.0,
            dt: 1.0,
            out: None,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown preset `{other}`; known presets: {}",
                figure_recipes()
                    .iter()
                    .map(|r| r.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    };
    Ok(cfg)
}

/// The 100-agent uniformly connected population with constant social
/// responsiveness (hence no leaders) and randomly drawn relevances/setpoints.
pub fn aggregation_demo(seed: u64) -> ModelParams {
    let n = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.gen_range(0.02..0.98);
        alpha.push(a);
        rho.push(rng.gen_range(0.02..0.98));
        b.push(1.0 / (1.0 - a));
    }
    ModelParams::new(b, alpha, rho, complete_weights(n)).expect("demo instance is valid")
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn out_path(dir: &Path, chosen: Option<&Path>, fallback: &str) -> PathBuf {
    match chosen {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => dir.join(p),
        None => dir.join(fallback),
    }
}

fn write_artifact(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(domain)?;
        }
    }
    std::fs::write(path, content).map_err(domain)
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
}

fn sample_grid(t_end: f64, dt: f64) -> Result<Vec<f64>, CliError> {
    if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(CliError::Usage(format!(
            "bad sampling: t_end = {t_end}, dt = {dt}"
        )));
    }
    let n = (t_end / dt).round() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

pub fn dispatch(cli: Cli) -> Result<String, CliError> {
    let out_dir = cli.out_dir.clone();
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&out_dir, args),
        Command::Equilibrium(args) => cmd_equilibrium(&out_dir, args),
        Command::Stability(args) => cmd_stability(&out_dir, args),
        Command::Aggregate(args) => cmd_aggregate(&out_dir, cli.seed, args),
        Command::Ocp(args) => cmd_ocp(&out_dir, args),
        Command::Game(args) => cmd_game(&out_dir, args),
        Command::Learn(args) => cmd_learn(&out_dir, args),
        Command::Sweep(args) => cmd_sweep(&out_dir, args),
    }
}

fn cmd_simulate(out_dir: &Path, args: SimulateArgs) -> Result<String, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => load_config::<SimulateConfig>(path)?,
        (None, Some(name)) => simulate_preset(name)?,
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either --config or --preset".into()))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "simulate needs --config or --preset".into(),
            ))
        }
    };
    if let Some(t) = args.t_end {
        cfg.t_end = t;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    let params = cfg.model.to_params()?;
    let init = SystemState::new(cfg.init.x, cfg.init.y.clone()).map_err(usage)?;
    let samples = sample_grid(cfg.t_end, cfg.dt)?;
    let tr = integrate_sampled(&params, &init, &samples, StepControl::default()).map_err(domain)?;
    let path = out_path(
        out_dir,
        args.out.as_deref(),
        cfg.out.as_deref().unwrap_or("trajectory.csv"),
    );
    write_artifact(&path, &tr.to_csv())?;
    let last = tr.last();
    Ok(format!(
        "simulate: {} agents to t = {}; final x = {:.6}; wrote {}",
        params.n_agents(),
        cfg.t_end,
        last.x,
        path.display()
    ))
}

fn cmd_equilibrium(out_dir: &Path, args: EquilibriumArgs) -> Result<String, CliError> {
    let cfg = load_config::<EquilibriumConfig>(&args.config)?;
    let params = cfg.model.to_params()?;
    let report: EquilibriumReport = match cfg.model.topology.as_str() {
        "single" => equilibrium_single(&params).map_err(domain)?,
        "dyad" => equilibrium_dual(&params).map_err(domain)?,
        "well_mixed" => equilibrium_well_mixed(&params).map_err(domain)?,
        "star" => equilibrium_star(&params).map_err(domain)?,
        _ => {
            let init = cfg.init.as_ref().ok_or_else(|| {
                CliError::Usage(
                    "custom topology needs an init block for the numerical search".into(),
                )
            })?;
            let state = SystemState::new(init.x, init.y.clone()).map_err(usage)?;
            equilibrium_numerical(&params, &state, &ConvergenceSpec::default()).map_err(domain)?
        }
    };
    let path = out_path(
        out_dir,
        args.out.as_deref(),
        cfg.out.as_deref().unwrap_or("equilibrium.json"),
    );
    write_artifact(
        &path,
        &serde_json::to_string_pretty(&report).map_err(domain)?,
    )?;
    let summary = match &report.equilibrium {
        Some(eq) => format!(
            "x = {:.6}, classification {:?}",
            eq.x_bar, report.classification
        ),
        None => format!("{:?}", report.existence),
    };
    Ok(format!("equilibrium: {summary}; wrote {}", path.display()))
}

#[derive(Debug, Serialize)]
struct StabilityArtifact {
    local: Option<serde_json::Value>,
    global: Option<serde_json::Value>,
    oracle: Option<serde_json::Value>,
    statics: Option<serde_json::Value>,
}

fn cmd_stability(out_dir: &Path, args: StabilityArgs) -> Result<String, CliError> {
    let cfg = load_config::<EquilibriumConfig>(&args.config)?;
    let params = cfg.model.to_params()?;
    let n = params.n_agents();
    let mut artifact = StabilityArtifact {
        local: None,
        global: None,
        oracle: None,
        statics: None,
    };
    let mut summary;
    match n {
        1 => {
            let local = classify_single(&params).map_err(domain)?;
            let global = global_single(&params).map_err(domain)?;
            summary = format!("{:?}, globally stable", local.local);
            artifact.local = Some(serde_json::to_value(&local).map_err(domain)?);
            artifact.global = Some(serde_json::to_value(&global).map_err(domain)?);
        }
        2 => {
            let routh = routh_dual(&params).map_err(domain)?;
            let lyap = lyapunov_dual(&params).map_err(domain)?;
            summary = format!(
                "exact test {}, margin {:.3e}",
                if routh.stable { "stable" } else { "unstable" },
                routh.margin
            );
            if let Some(trials) = args.oracle_trials {
                let eq = equilibrium_dual(&params)
                    .map_err(domain)?
                    .equilibrium
                    .ok_or_else(|| CliError::Domain("no equilibrium for the oracle".into()))?;
                let state = SystemState::new(eq.x_bar, eq.y_bar).map_err(domain)?;
                let oracle =
                    stability_oracle(&params, &state, trials, 0.3, 7, 4000.0).map_err(domain)?;
                summary.push_str(&format!(", oracle {}/{}", oracle.converged, oracle.trials));
                artifact.oracle = Some(serde_json::to_value(&oracle).map_err(domain)?);
            }
            if let Ok(statics) = comparative_statics_dual(&params) {
                artifact.statics = Some(serde_json::to_value(&statics).map_err(domain)?);
            }
            artifact.local = Some(serde_json::to_value(&routh).map_err(domain)?);
            artifact.global = Some(serde_json::to_value(&lyap).map_err(domain)?);
        }
        _ => {
            return Err(CliError::Usage(
                "stability reports cover the single-agent and dyad forms".into(),
            ))
        }
    }
    let path = out_path(out_dir, args.out.as_deref(), "stability.json");
    write_artifact(
        &path,
        &serde_json::to_string_pretty(&artifact).map_err(domain)?,
    )?;

    if let Some(cells) = args.grid {
        if n != 2 {
            return Err(CliError::Usage("--grid needs the dyad form".into()));
        }
        let grid = routh_grid(
            [params.susceptibility[0], params.susceptibility[1]],
            [params.environmentalism[0], params.environmentalism[1]],
            cells,
        );
        let mut csv = String::from("nu1,nu2,stable\n");
        for (n1, n2, verdict) in grid {
            csv.push_str(&format!("{n1},{n2},{}\n", verdict as u8));
        }
        let grid_path = out_path(out_dir, None, "stability_grid.csv");
        write_artifact(&grid_path, &csv)?;
        summary.push_str(&format!(", grid {}x{} written", cells, cells));
    }
    Ok(format!("stability: {summary}; wrote {}", path.display()))
}

fn parse_partition(raw: &str, n: usize) -> Result<Partition, CliError> {
    let groups: Result<Vec<Vec<usize>>, _> = raw
        .split(';')
        .map(|g| {
            g.split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect();
    let groups = groups.map_err(|e| CliError::Usage(format!("bad partition: {e}")))?;
    Partition::new(groups, n).map_err(usage)
}

fn cmd_aggregate(out_dir: &Path, seed: u64, args: AggregateArgs) -> Result<String, CliError> {
    let params = match (&args.network, args.preset.as_deref()) {
        (Some(path), None) => load_config::<NetworkFile>(path)?
            .to_params()
            .map_err(usage)?,
        (None, Some("aggregation-demo")) => aggregation_demo(seed),
        (None, Some(other)) => {
            return Err(CliError::Usage(format!(
                "unknown aggregate preset `{other}`"
            )))
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give --network or --preset, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "aggregate needs --network or --preset".into(),
            ))
        }
    };
    let n = params.n_agents();
    match args.mode.as_str() {
        "classify" => {
            let partition = match &args.partition {
                Some(raw) => parse_partition(raw, n)?,
                None => Partition::single_group(n),
            };
            let report = classify_network(&params, &partition, CLASSIFY_TOL).map_err(domain)?;
            let spectrum =
                laplacian_spectrum(&InfluenceNetwork::from_params(&params).map_err(domain)?);
            let artifact = serde_json::json!({ "classification": report, "spectrum": spectrum });
            let path = out_path(out_dir, args.out.as_deref(), "network_report.json");
            write_artifact(
                &path,
                &serde_json::to_string_pretty(&artifact).map_err(domain)?,
            )?;
            Ok(format!(
                "aggregate: strongest class {:?}; wrote {}",
                report.strongest(),
                path.display()
            ))
        }
        "exact" => {
            let raw = args
                .partition
                .as_ref()
                .ok_or_else(|| CliError::Usage("exact aggregation needs --partition".into()))?;
            let partition = parse_partition(raw, n)?;
            let block = aggregate_exact(&params, &partition).map_err(domain)?;
            let path = out_path(out_dir, args.out.as_deref(), "block_model.json");
            write_artifact(
                &path,
                &serde_json::to_string_pretty(&block).map_err(domain)?,
            )?;
            Ok(format!(
                "aggregate: {} groups; wrote {}",
                block.m_groups(),
                path.display()
            ))
        }
        "lumped" => {
            let lump = aggregate_self_directed(&params).map_err(domain)?;
            let path = out_path(out_dir, args.out.as_deref(), "lumped.json");
            write_artifact(&path, &serde_json::to_string_pretty(&lump).map_err(domain)?)?;
            Ok(format!(
                "aggregate: lumped responsiveness {:.6}, setpoint {:.6}; wrote {}",
                lump.ba_hat,
                lump.p_hat,
                path.display()
            ))
        }
        "approx" => {
            let lump = aggregate_self_directed(&params).map_err(domain)?;
            let ba = args.ba.unwrap_or(lump.ba_hat);
            let p = args.p.unwrap_or(lump.p_hat);
            let init = SystemState::new(0.2, vec![0.0; n]).map_err(domain)?;
            let samples = sample_grid(args.t_end, 0.25)?;
            let ctrl = StepControl {
                atol: 1e-12,
                rtol: 1e-10,
            };
            let rep =
                aggregate_approximate(&params, &init, ba, p, &samples, ctrl).map_err(domain)?;
            let mut csv = String::from("t,e_x,e_y\n");
            for ((t, ex), ey) in rep.times.iter().zip(&rep.e_x).zip(&rep.e_y) {
                csv.push_str(&format!("{t},{ex},{ey}\n"));
            }
            let path = out_path(out_dir, args.out.as_deref(), "aggregation_error.csv");
            write_artifact(&path, &csv)?;
            Ok(format!(
                "aggregate: sup errors ({:.3e}, {:.3e}), steady ({:.3e}, {:.3e}); wrote {}",
                rep.sup_e_x,
                rep.sup_e_y,
                rep.steady_e_x,
                rep.steady_e_y,
                path.display()
            ))
        }
        other => Err(CliError::Usage(format!("unknown aggregate mode `{other}`"))),
    }
}

fn cmd_ocp(out_dir: &Path, args: OcpArgs) -> Result<String, CliError> {
    let (delta, x0) = match args.preset.as_deref() {
        Some("ocp-sustainable") => (0.01, 0.1),
        Some("ocp-unsustainable") => (10.0, 0.5),
        Some(other) => return Err(CliError::Usage(format!("unknown preset `{other}`"))),
        None => (
            args.delta
                .ok_or_else(|| CliError::Usage("ocp needs --delta or --preset".into()))?,
            args.x0.unwrap_or(0.1),
        ),
    };
    let ocp = OcpParams::new(delta, args.mu, args.beta, x0).map_err(usage)?;
    let law = match regime(delta) {
        Regime::Sustainable => {
            let s = saddle_point(delta).map_err(domain)?;
            let z0 = 1.0 / x0;
            let z_min = (s.z.min(z0) / 8.0).min(0.5);
            let z_max = (s.z.max(z0) * 8.0).max(4.0);
            synthesize_feedback(delta, z_min, z_max, args.nodes).map_err(domain)?
        }
        Regime::Unsustainable => {
            synthesize_feedback(delta, (1.0 / x0) / 4.0, 2e4, args.nodes).map_err(domain)?
        }
    };
    let t_end = args
        .t_end
        .unwrap_or(if delta < 1.0 { 1000.0 } else { 100.0 });
    let samples = sample_grid(t_end, (t_end / 2000.0).max(0.05))?;
    let tr = simulate_optimal(&ocp, &law, &samples).map_err(domain)?;

    let law_path = out_path(out_dir, args.law_out.as_deref(), "feedback_law.csv");
    write_artifact(&law_path, &law.to_csv())?;
    let traj_path = out_path(out_dir, args.traj_out.as_deref(), "ocp_trajectory.csv");
    write_artifact(&traj_path, &tr.to_csv())?;

    let report = serde_json::json!({
        "params": ocp,
        "regime": law.regime,
        "sustainability": sustainability_check(&ocp),
        "rest_point": saddle_point(delta).ok(),
        "diagnostics": law.diagnostics,
        "final_state": { "x": tr.x.last(), "y": tr.y.last() },
    });
    let report_path = out_path(out_dir, args.report_out.as_deref(), "ocp_report.json");
    write_artifact(
        &report_path,
        &serde_json::to_string_pretty(&report).map_err(domain)?,
    )?;
    Ok(format!(
        "ocp: delta = {delta}, regime {:?}, final (x, y) = ({:.6}, {:.6}); wrote {}, {}, {}",
        law.regime,
        tr.x.last().unwrap(),
        tr.y.last().unwrap(),
        law_path.display(),
        traj_path.display(),
        report_path.display()
    ))
}

fn cmd_game(out_dir: &Path, args: GameArgs) -> Result<String, CliError> {
    if args.discrete {
        let thresholds = DiscreteThresholds {
            rho_low: args
                .rho_low
                .ok_or_else(|| CliError::Usage("discrete game needs --rho-low".into()))?,
            rho_high: args
                .rho_high
                .ok_or_else(|| CliError::Usage("discrete game needs --rho-high".into()))?,
            nu_low: args
                .nu_low
                .ok_or_else(|| CliError::Usage("discrete game needs --nu-low".into()))?,
            nu_high: args
                .nu_high
                .ok_or_else(|| CliError::Usage("discrete game needs --nu-high".into()))?,
        };
        let game = build_discrete_game(thresholds, [1.0, 1.0]).map_err(domain)?;
        let path = out_path(out_dir, args.out.as_deref(), "discrete_game.json");
        write_artifact(&path, &serde_json::to_string_pretty(&game).map_err(domain)?)?;
        Ok(format!(
            "game: {:?}, tragic = {}, equilibria {:?}; wrote {}",
            game.label,
            game.tragic,
            game.nash_set,
            path.display()
        ))
    } else {
        let nu1 = args
            .nu1
            .ok_or_else(|| CliError::Usage("continuous game needs --nu1".into()))?;
        let nu2 = args
            .nu2
            .ok_or_else(|| CliError::Usage("continuous game needs --nu2".into()))?;
        let game = ContinuousGame::new(nu1, nu2).map_err(domain)?;
        let rep = game.tragicness();
        let payoffs = game.payoffs(rep.nash[0], rep.nash[1]).map_err(domain)?;
        let artifact = serde_json::json!({
            "nu": game.nu,
            "nash": rep.nash,
            "welfare_line": rep.line,
            "tragicness": rep.tragicness,
            "payoffs_at_nash": payoffs,
        });
        let path = out_path(out_dir, args.out.as_deref(), "game.json");
        write_artifact(
            &path,
            &serde_json::to_string_pretty(&artifact).map_err(domain)?,
        )?;
        Ok(format!(
            "game: nash = ({:.6}, {:.6}), tragicness = {:.6}; wrote {}",
            rep.nash[0],
            rep.nash[1],
            rep.tragicness,
            path.display()
        ))
    }
}

fn cmd_learn(out_dir: &Path, args: LearnArgs) -> Result<String, CliError> {
    let (nu1, nu2, state) = match args.preset.as_deref() {
        Some("learning-identical") => (
            0.5,
            0.5,
            LearningState::new(0.5, [0.0, 0.0], [0.8, 0.2]).map_err(domain)?,
        ),
        Some("learning-mixed") => (
            0.75,
            0.25,
            LearningState::new(0.5, [0.0, 0.0], [0.8, 0.2]).map_err(domain)?,
        ),
        Some(other) => return Err(CliError::Usage(format!("unknown preset `{other}`"))),
        None => {
            let nu1 = args
                .nu1
                .ok_or_else(|| CliError::Usage("learn needs --nu1 or --preset".into()))?;
            let nu2 = args
                .nu2
                .ok_or_else(|| CliError::Usage("learn needs --nu2 or --preset".into()))?;
            (
                nu1,
                nu2,
                LearningState::new(args.x0, [args.y1, args.y2], [args.rho1, args.rho2])
                    .map_err(usage)?,
            )
        }
    };
    let params = LearningParams::new(nu1, nu2, args.b1, args.b2).map_err(domain)?;
    let samples = sample_grid(args.t_end, args.dt)?;
    let tr =
        simulate_learning(&params, &state, &samples, StepControl::default()).map_err(domain)?;
    let path = out_path(out_dir, args.out.as_deref(), "learning.csv");
    write_artifact(&path, &tr.to_csv())?;

    let stability = learning_stability(nu1, nu2, args.b1, args.b2).map_err(domain)?;
    let equilibrium = learning_equilibrium(nu1, nu2).map_err(domain)?;
    let report = serde_json::json!({ "stability": stability, "equilibrium": equilibrium });
    let report_path = out_path(out_dir, args.report_out.as_deref(), "learning_report.json");
    write_artifact(
        &report_path,
        &serde_json::to_string_pretty(&report).map_err(domain)?,
    )?;
    let last = tr.last();
    Ok(format!(
        "learn: final (x, rho1, rho2) = ({:.6}, {:.6}, {:.6}); wrote {}, {}",
        last.x,
        last.rho[0],
        last.rho[1],
        path.display(),
        report_path.display()
    ))
}

fn cmd_sweep(out_dir: &Path, args: SweepArgs) -> Result<String, CliError> {
    if args.figure == "help" {
        let mut lines = String::from("available presets and figures:\n");
        for r in figure_recipes() {
            lines.push_str(&format!("  {:<22} {}\n", r.name, r.description));
        }
        lines.push_str("  game-a..game-e         continuous-game grids over (avg, diff) of nu\n");
        lines.push_str(
            "  disc-type|disc-trag|disc-res  discrete-game slices over (rho_low, rho_high)\n",
        );
        lines.push_str("  stab-2                 exact dyad stability scan over (nu1, nu2)\n");
        return Ok(lines);
    }
    match args.figure.as_str() {
        "game-a" | "game-b" | "game-c" | "game-d" | "game-e" => {
            let cells = args.cells.unwrap_or(100);
            let rows = sweep_continuous(cells);
            let mut csv = String::from(
                "nu_avg,nu_diff,nu1,nu2,tragicness,stock_at_nash,total_consumption,consumption_1,consumption_gap,stability_guaranteed,error\n",
            );
            for c in rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    c.nu_avg,
                    c.nu_diff,
                    c.nu1,
                    c.nu2,
                    opt(c.tragicness),
                    opt(c.stock_at_nash),
                    opt(c.total_consumption),
                    opt(c.consumption_1),
                    opt(c.consumption_gap),
                    c.stability_guaranteed as u8,
                    c.error.map(|e| e.replace(',', ";")).unwrap_or_default()
                ));
            }
            let path = out_path(
                out_dir,
                args.out.as_deref(),
                &format!("sweep_{}.csv", args.figure),
            );
            write_artifact(&path, &csv)?;
            Ok(format!(
                "sweep: {cells}x{cells} continuous-game grid; wrote {}",
                path.display()
            ))
        }
        "disc-type" | "disc-trag" | "disc-res" => {
            let cells = args.cells.unwrap_or(40);
            let slices: Vec<(f64, f64)> =
                vec![(0.25, 0.5), (0.25, 0.75), (0.5, 0.75), (0.25, 0.95)];
            let blocks: Vec<String> = slices
                .par_iter()
                .map(|(nu_low, nu_high)| {
                    let mut block = String::new();
                    for c in sweep_discrete(*nu_low, *nu_high, cells) {
                        block.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            c.rho_low,
                            c.rho_high,
                            c.nu_low,
                            c.nu_high,
                            c.label.map(|l| format!("{l:?}")).unwrap_or_default(),
                            c.tragic.map(|t| (t as u8).to_string()).unwrap_or_default(),
                            opt(c.stock_at_nash),
                            c.error.map(|e| e.replace(',', ";")).unwrap_or_default()
                        ));
                    }
                    block
                })
                .collect();
            let mut csv =
                String::from("rho_low,rho_high,nu_low,nu_high,label,tragic,stock_at_nash,error\n");
            for b in blocks {
                csv.push_str(&b);
            }
            let path = out_path(
                out_dir,
                args.out.as_deref(),
                &format!("sweep_{}.csv", args.figure),
            );
            write_artifact(&path, &csv)?;
            Ok(format!(
                "sweep: {} slices x {cells}x{cells} discrete-game cells; wrote {}",
                slices.len(),
                path.display()
            ))
        }
        "stab-2" => {
            let cells = args.cells.unwrap_or(50);
            let grid = routh_grid([0.2, 0.1], [0.1, 0.1], cells);
            let mut csv = String::from("nu1,nu2,stable\n");
            for (n1, n2, verdict) in grid {
                csv.push_str(&format!("{n1},{n2},{}\n", verdict as u8));
            }
            let path = out_path(out_dir, args.out.as_deref(), "sweep_stab-2.csv");
            write_artifact(&path, &csv)?;
            Ok(format!(
                "sweep: {cells}x{cells} stability scan; wrote {}",
                path.display()
            ))
        }
        other => Err(CliError::Usage(format!(
            "unknown figure `{other}`; try `sweep --figure help`"
        ))),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
