//! Command-line surface over the `beliefnet` library.
//!
//! Four commands: `classify` reports the information measures and type of one
//! binary structure; `simulate` runs a scenario and writes trajectory,
//! metrics, summary, and manifest files; `sweep` evaluates region or
//! learning-speed grids; `bound` prints the conservative learning-rate bound.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
//! 3 hypothesis violation (bound requested for a non-conservative
//! population). The environment variable `BELIEFNET_SEED` overrides the
//! config seed; an explicit `--seed` flag overrides both.

pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use beliefnet::classify::{region_sweep, GridSpec, DEFAULT_CLASSIFY_TOL};
use beliefnet::core::{make_binary_structure, AgentType, WorldSignalStructure};
use beliefnet::harness::{
    classify_population, preset, rate_bound_report, run_one_replicate, run_replicates, speed_sweep,
    ExperimentConfig, Quantiles,
};
use output::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;

/// Environment variable that overrides the config seed.
pub const SEED_ENV_VAR: &str = "BELIEFNET_SEED";

#[derive(Parser)]
#[command(
    name = "beliefnet",
    version,
    about = "Simulate non-Bayesian social learning with imperfect private signal structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Classify every (alpha, beta) lattice point.
    Regions,
    /// Run a full network per conservative cell and relate |k| to |ln e_T|.
    Speed,
}

#[derive(Subcommand)]
enum Command {
    /// Report h, k, and the agent type of a binary signal structure.
    Classify {
        /// Likelihood of the high signal under the real state.
        #[arg(long)]
        alpha: f64,
        /// Likelihood of the high signal under the alternative state.
        #[arg(long)]
        beta: f64,
        /// World probability of the high signal.
        #[arg(long)]
        g: f64,
        /// Boundary band half-width around h = 0 and k = 0.
        #[arg(long, default_value_t = DEFAULT_CLASSIFY_TOL)]
        tol: f64,
    },
    /// Run a scenario: writes trajectory.csv, metrics.csv, summary.json and
    /// manifest.json into the output directory.
    Simulate {
        /// Named scenario preset.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override (takes precedence over BELIEFNET_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate a grid sweep and write its CSV table.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        /// Sweep preset carrying grid and dynamics parameters.
        #[arg(long, conflicts_with_all = ["g", "grid", "grid_min", "grid_max"])]
        preset: Option<String>,
        /// World probability of the high signal.
        #[arg(long, default_value_t = 0.8)]
        g: f64,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 25)]
        grid: usize,
        /// Lower lattice bound on both axes.
        #[arg(long, default_value_t = 0.02)]
        grid_min: f64,
        /// Upper lattice bound on both axes.
        #[arg(long, default_value_t = 0.98)]
        grid_max: f64,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the learning-rate bound of a conservative scenario.
    Bound {
        /// Named scenario preset.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Also run replicate 0 and report the empirical rate estimate.
        #[arg(long)]
        simulate: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

type CmdResult = Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: message.into(),
    }
}

/// Parses the argument list, dispatches, and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Classify {
            alpha,
            beta,
            g,
            tol,
        } => cmd_classify(alpha, beta, g, tol),
        Command::Simulate {
            preset,
            config,
            seed,
            out,
        } => cmd_simulate(preset.as_deref(), config.as_deref(), seed, &out),
        Command::Sweep {
            kind,
            preset,
            g,
            grid,
            grid_min,
            grid_max,
            seed,
            out,
        } => cmd_sweep(
            kind,
            preset.as_deref(),
            g,
            grid,
            grid_min,
            grid_max,
            seed,
            &out,
        ),
        Command::Bound {
            preset,
            config,
            seed,
            simulate,
        } => cmd_bound(preset.as_deref(), config.as_deref(), seed, simulate),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// Seed precedence: `--seed` flag, then `BELIEFNET_SEED`, then the config.
fn effective_seed(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV_VAR} must be a u64, got `{text}`"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(err) => Err(usage(format!("{SEED_ENV_VAR}: {err}"))),
    }
}

fn resolve_config(
    preset_name: Option<&str>,
    config_path: Option<&Path>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, Failure> {
    let mut config = match (preset_name, config_path) {
        (Some(name), None) => preset(name).map_err(|e| usage(e.to_string()))?,
        (None, Some(path)) => output::load_config(path).map_err(usage)?,
        _ => return Err(usage("provide exactly one of --preset or --config")),
    };
    if let Some(seed) = effective_seed(seed)? {
        config.master_seed = seed;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn cmd_classify(alpha: f64, beta: f64, g: f64, tol: f64) -> CmdResult {
    let world = WorldSignalStructure::binary(g).map_err(|e| usage(e.to_string()))?;
    let structure = make_binary_structure(alpha, beta).map_err(|e| usage(e.to_string()))?;
    let h =
        beliefnet::classify::h_g(&world, &structure, 1, 0).map_err(|e| runtime(e.to_string()))?;
    let k =
        beliefnet::classify::k_g(&world, &structure, 1, 0).map_err(|e| runtime(e.to_string()))?;
    let agent_type = beliefnet::classify::classify_structure(&world, &structure, 0, tol)
        .map_err(|e| usage(e.to_string()))?;
    println!("h={h:.4} k={k:.4} {agent_type}");
    Ok(())
}

fn quantile_line(name: &str, q: &Quantiles) -> String {
    format!(
        "{name}: min={:.6} median={:.6} max={:.6}",
        q.min, q.median, q.max
    )
}

fn cmd_simulate(
    preset_name: Option<&str>,
    config_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> CmdResult {
    let config = resolve_config(preset_name, config_path, seed)?;
    if config.is_sweep() {
        return Err(usage(format!(
            "scenario `{}` is a sweep; run `beliefnet sweep` instead",
            config.scenario
        )));
    }
    let started = Instant::now();
    let summary = run_replicates(&config).map_err(|e| runtime(e.to_string()))?;
    let (trajectory, _) = run_one_replicate(&config, 0).map_err(|e| runtime(e.to_string()))?;

    let io_err = |e: std::io::Error| runtime(format!("writing outputs: {e}"));
    let traj_path = output::prepare_output(out, "trajectory.csv").map_err(io_err)?;
    output::write_trajectory_csv(&traj_path, &trajectory).map_err(io_err)?;
    let metrics_path = out.join("metrics.csv");
    output::write_metrics_csv(&metrics_path, &trajectory.series).map_err(io_err)?;
    let summary_path = out.join("summary.json");
    output::write_summary_json(&summary_path, &summary).map_err(io_err)?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario.clone(),
        master_seed: config.master_seed,
        config: config.clone(),
        outputs: vec![
            "trajectory.csv".into(),
            "metrics.csv".into(),
            "summary.json".into(),
            "manifest.json".into(),
        ],
        duration_seconds: started.elapsed().as_secs_f64(),
        clamped_entries: trajectory.metadata.clamped_entries,
        max_normalization_deviation: trajectory.metadata.max_normalization_deviation,
    };
    let manifest_path = out.join("manifest.json");
    output::write_manifest_json(&manifest_path, &manifest).map_err(io_err)?;

    println!(
        "scenario {}: {} replicates of {} steps on n={} (seed {})",
        config.scenario, config.replicates, config.steps, config.n, config.master_seed
    );
    println!(
        "{}",
        quantile_line("min truth belief at T", &summary.aggregate.min_truth_belief)
    );
    println!(
        "{}",
        quantile_line(
            "belief uncertainty at T",
            &summary.aggregate.final_belief_uncertainty
        )
    );
    println!(
        "wrote {} {} {} {}",
        traj_path.display(),
        metrics_path.display(),
        summary_path.display(),
        manifest_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    kind: SweepKind,
    preset_name: Option<&str>,
    g: f64,
    grid: usize,
    grid_min: f64,
    grid_max: f64,
    seed: Option<u64>,
    out: &Path,
) -> CmdResult {
    let config = match preset_name {
        Some(name) => resolve_config(Some(name), None, seed)?,
        None => {
            let spec = GridSpec::new(grid_min, grid_max, grid).map_err(|e| usage(e.to_string()))?;
            if !(g > 0.0 && g < 1.0) {
                return Err(usage(format!("--g must lie in (0, 1), got {g}")));
            }
            let mut config = ExperimentConfig {
                scenario: format!("{kind:?}_sweep").to_lowercase(),
                n: 100,
                er_probability: 0.1,
                gamma: 0.5,
                steps: 50,
                replicates: 1,
                master_seed: beliefnet::harness::DEFAULT_MASTER_SEED,
                population: Vec::new(),
                world: vec![g, 1.0 - g],
                record_every: 50,
                grid: Some(spec),
            };
            if let Some(seed) = effective_seed(seed)? {
                config.master_seed = seed;
            }
            config
        }
    };
    let grid_spec = config
        .grid
        .ok_or_else(|| usage(format!("scenario `{}` carries no grid", config.scenario)))?;
    let world = config.world_structure().map_err(|e| usage(e.to_string()))?;
    let started = Instant::now();
    let io_err = |e: std::io::Error| runtime(format!("writing outputs: {e}"));

    let (file_name, report) = match kind {
        SweepKind::Regions => {
            let regions = region_sweep(&world, grid_spec).map_err(|e| runtime(e.to_string()))?;
            let path = output::prepare_output(out, "regions.csv").map_err(io_err)?;
            output::write_region_csv(&path, &regions).map_err(io_err)?;
            let counts = [
                AgentType::Conservative,
                AgentType::Radical,
                AgentType::Negative,
                AgentType::Boundary,
            ]
            .map(|t| format!("{t}={}", regions.count_of(t)));
            (
                "regions.csv",
                format!(
                    "regions {0}x{0} over [{1}, {2}], g={3}: {4}",
                    grid_spec.count,
                    grid_spec.min,
                    grid_spec.max,
                    world.probability(0),
                    counts.join(" ")
                ),
            )
        }
        SweepKind::Speed => {
            let result = speed_sweep(&config).map_err(|e| runtime(e.to_string()))?;
            let path = output::prepare_output(out, "speed.csv").map_err(io_err)?;
            output::write_speed_csv(&path, &result).map_err(io_err)?;
            (
                "speed.csv",
                format!(
                    "speed sweep: {} conservative cells ({} skipped), pearson r = {:.4}",
                    result.cells.len(),
                    result.skipped.len(),
                    result.pearson_r
                ),
            )
        }
    };

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.scenario.clone(),
        master_seed: config.master_seed,
        config: config.clone(),
        outputs: vec![file_name.into(), "manifest.json".into()],
        duration_seconds: started.elapsed().as_secs_f64(),
        clamped_entries: 0,
        max_normalization_deviation: 0.0,
    };
    output::write_manifest_json(&out.join("manifest.json"), &manifest).map_err(io_err)?;

    println!("{report}");
    println!("wrote {}", out.join(file_name).display());
    Ok(())
}

fn cmd_bound(
    preset_name: Option<&str>,
    config_path: Option<&Path>,
    seed: Option<u64>,
    simulate: bool,
) -> CmdResult {
    let config = resolve_config(preset_name, config_path, seed)?;
    if config.population.is_empty() {
        return Err(usage(format!(
            "scenario `{}` has no population; the bound needs one",
            config.scenario
        )));
    }
    let groups = classify_population(&config).map_err(|e| usage(e.to_string()))?;
    println!(
        "population classification (g = {:?}):",
        config.world.as_slice()
    );
    let mut all_conservative = true;
    for group in &groups {
        println!(
            "  count={} alpha={} beta={} h={:.4} k={:.4} {}",
            group.count, group.alpha, group.beta, group.h, group.k, group.agent_type
        );
        all_conservative &= group.agent_type == AgentType::Conservative;
    }
    if !all_conservative {
        return Err(Failure {
            code: EXIT_HYPOTHESIS,
            message: "population is not all conservative; the rate bound does not apply".into(),
        });
    }
    let report = rate_bound_report(&config, 0).map_err(|e| runtime(e.to_string()))?;
    let v_text: Vec<String> = report
        .eigenvector
        .iter()
        .map(|x| format!("{x:.6}"))
        .collect();
    println!("v = [{}]", v_text.join(", "));
    for (m, weighted) in report.weighted_abs_k.iter().enumerate() {
        println!(
            "sum_i v_i |k_i| (alternative state {}): {weighted:.6}",
            m + 1
        );
    }
    println!(
        "learning-rate bound: gamma * min = {:.6} (gamma = {})",
        report.bound, config.gamma
    );
    if simulate {
        let (_, stats) = run_one_replicate(&config, 0).map_err(|e| runtime(e.to_string()))?;
        match (stats.rate_endpoint, stats.rate_slope) {
            (Some(endpoint), Some(slope)) => println!(
                "empirical rate estimate at T={}: |ln e_T|/T = {endpoint:.6} (window slope {slope:.6})",
                config.steps
            ),
            _ => println!("empirical rate estimate: converged exactly"),
        }
    }
    Ok(())
}
