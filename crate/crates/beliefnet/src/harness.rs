//! Scenario presets, replicate orchestration, and parameter sweeps.
//!
//! A scenario fixes the network size and density, the shared self-reliance,
//! the population of binary signal structures, the world structure, and the
//! horizon. [`run_replicates`] executes independent replicates in parallel;
//! each replicate regenerates its network, structure placement, and initial
//! beliefs from seeds derived per replicate, so results do not depend on the
//! execution schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_structure, h_g, k_g, GridSpec, DEFAULT_CLASSIFY_TOL};
use crate::core::{
    make_binary_structure, AgentType, BeliefProfile, StateSpace, WorldSignalStructure,
};
use crate::dynamics::{run, AgentSpec, Trajectory};
use crate::metrics::{learning_rate_estimate, RateEstimate};
use crate::rng::{self, derive_seed, Stream};
use crate::topology::{generate_er, left_unit_eigenvector, uniform_influence};
use crate::{Error, Result};

/// Master seed used by presets when the caller does not supply one.
pub const DEFAULT_MASTER_SEED: u64 = 1729;

/// Replicate count used by the statistical presets.
pub const DEFAULT_REPLICATES: usize = 10;

/// Valid preset identifiers accepted by [`preset`].
pub const PRESET_NAMES: [&str; 10] = [
    "fig4_regions",
    "fig5a",
    "fig5b",
    "fig6a",
    "fig6b",
    "fig7_sweep",
    "fig8_sweep",
    "fig9a",
    "fig9b",
    "fig9c",
];

/// A block of agents sharing one binary signal structure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationGroup {
    pub count: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Full description of one experiment.
///
/// `population` lists structure groups whose counts sum to `n`; sweep
/// scenarios leave it empty and carry a `grid` instead. The JSON form of this
/// struct is the CLI's configuration file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub n: usize,
    pub er_probability: f64,
    pub gamma: f64,
    pub steps: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub population: Vec<PopulationGroup>,
    pub world: Vec<f64>,
    pub record_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Domain("replicates must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Domain("record_every must be at least 1".into()));
        }
        if !(self.er_probability > 0.0 && self.er_probability <= 1.0) {
            return Err(Error::Parameter {
                name: "er_probability",
                reason: format!("must lie in (0, 1], got {}", self.er_probability),
            });
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter {
                name: "gamma",
                reason: format!("must lie in (0, 1], got {}", self.gamma),
            });
        }
        self.world_structure()?;
        if self.population.is_empty() {
            if self.grid.is_none() {
                return Err(Error::Domain(
                    "config needs a population (simulation) or a grid (sweep)".into(),
                ));
            }
        } else {
            if self.n == 0 {
                return Err(Error::Domain("n must be at least 1".into()));
            }
            let total: usize = self.population.iter().map(|g| g.count).sum();
            if total != self.n {
                return Err(Error::Domain(format!(
                    "population counts sum to {total} but n = {}",
                    self.n
                )));
            }
            for g in &self.population {
                for (name, v) in [("alpha", g.alpha), ("beta", g.beta)] {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::Parameter {
                            name,
                            reason: format!("must lie in (0, 1), got {v}"),
                        });
                    }
                }
            }
        }
        if let Some(grid) = self.grid {
            GridSpec::new(grid.min, grid.max, grid.count)?;
        }
        Ok(())
    }

    pub fn world_structure(&self) -> Result<WorldSignalStructure> {
        WorldSignalStructure::new(self.world.clone())
    }

    /// True for sweep scenarios, which carry a grid instead of a population.
    pub fn is_sweep(&self) -> bool {
        self.grid.is_some() && self.population.is_empty()
    }
}

/// The configuration behind each named scenario.
///
/// Simulation presets use a 100-node network of density 0.1 with world
/// `[0.8, 0.2]`, 500 steps, and 10 replicates. Sweep presets use the 25x25
/// lattice over `[0.02, 0.98]` with `gamma = 0.5` and a 50-step horizon.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig {
        scenario: name.to_string(),
        n: 100,
        er_probability: 0.1,
        gamma: 0.5,
        steps: 500,
        replicates: DEFAULT_REPLICATES,
        master_seed: DEFAULT_MASTER_SEED,
        population: Vec::new(),
        world: vec![0.8, 0.2],
        record_every: 10,
        grid: None,
    };
    let all = |alpha, beta| {
        vec![PopulationGroup {
            count: 100,
            alpha,
            beta,
        }]
    };
    let mixed = vec![
        PopulationGroup {
            count: 90,
            alpha: 0.6,
            beta: 0.4,
        },
        PopulationGroup {
            count: 10,
            alpha: 0.4,
            beta: 0.6,
        },
    ];
    let sweep_grid = Some(GridSpec {
        min: 0.02,
        max: 0.98,
        count: 25,
    });
    let config = match name {
        "fig5a" => ExperimentConfig {
            gamma: 0.1,
            population: all(0.6, 0.4),
            ..base
        },
        "fig5b" => ExperimentConfig {
            gamma: 0.9,
            population: all(0.6, 0.4),
            ..base
        },
        "fig6a" => ExperimentConfig {
            gamma: 0.1,
            population: all(0.9, 0.1),
            ..base
        },
        "fig6b" => ExperimentConfig {
            gamma: 0.9,
            population: all(0.9, 0.1),
            ..base
        },
        "fig9a" => ExperimentConfig {
            gamma: 0.1,
            population: mixed,
            ..base
        },
        "fig9b" => ExperimentConfig {
            gamma: 0.5,
            population: mixed,
            ..base
        },
        "fig9c" => ExperimentConfig {
            gamma: 0.9,
            population: mixed,
            ..base
        },
        "fig7_sweep" | "fig8_sweep" => ExperimentConfig {
            steps: 50,
            replicates: 1,
            record_every: 50,
            grid: sweep_grid,
            ..base
        },
        "fig4_regions" => ExperimentConfig {
            steps: 50,
            replicates: 1,
            record_every: 50,
            grid: sweep_grid,
            ..base
        },
        _ => {
            return Err(Error::Domain(format!(
                "unknown preset `{name}`; valid presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(config)
}

/// Outcome of one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStats {
    pub replicate: usize,
    pub graph_seed: u64,
    pub final_belief_uncertainty: f64,
    pub min_truth_belief: f64,
    pub mean_truth_belief: f64,
    pub consensus_gap: f64,
    pub rate_endpoint: Option<f64>,
    pub rate_slope: Option<f64>,
    pub converged_exactly: bool,
    pub clamped_entries: u64,
}

/// Min / median / max of one metric across replicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

fn quantiles(mut values: Vec<f64>) -> Quantiles {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    };
    Quantiles {
        min: values[0],
        median,
        max: values[n - 1],
    }
}

/// Replicate-level quantiles of the headline metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub final_belief_uncertainty: Quantiles,
    pub min_truth_belief: Quantiles,
    pub mean_truth_belief: Quantiles,
    pub consensus_gap: Quantiles,
}

impl AggregateStats {
    /// Recomputes the aggregate from per-replicate rows.
    pub fn from_replicates(replicates: &[ReplicateStats]) -> AggregateStats {
        AggregateStats {
            final_belief_uncertainty: quantiles(
                replicates
                    .iter()
                    .map(|r| r.final_belief_uncertainty)
                    .collect(),
            ),
            min_truth_belief: quantiles(replicates.iter().map(|r| r.min_truth_belief).collect()),
            mean_truth_belief: quantiles(replicates.iter().map(|r| r.mean_truth_belief).collect()),
            consensus_gap: quantiles(replicates.iter().map(|r| r.consensus_gap).collect()),
        }
    }
}

/// Per-replicate rows plus their aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub scenario: String,
    pub master_seed: u64,
    pub replicates: Vec<ReplicateStats>,
    pub aggregate: AggregateStats,
}

impl ReplicateSummary {
    /// True iff the stored aggregate matches a recomputation from the rows;
    /// checked when summaries are loaded back from disk.
    pub fn verify(&self) -> bool {
        !self.replicates.is_empty()
            && self.aggregate == AggregateStats::from_replicates(&self.replicates)
    }
}

/// Resolves the per-agent structure parameters for one replicate: groups are
/// flattened in order and then placed at uniformly random node positions via
/// the replicate's placement stream.
fn placed_structures(config: &ExperimentConfig, replicate: u64) -> Vec<(f64, f64)> {
    let mut structures = Vec::with_capacity(config.n);
    for group in &config.population {
        structures.extend(std::iter::repeat_n((group.alpha, group.beta), group.count));
    }
    let mut placement = Stream::from_seed(derive_seed(
        config.master_seed,
        &[replicate, rng::role::PLACEMENT],
    ));
    placement.shuffle(&mut structures);
    structures
}

/// Initial belief profile on `states` states drawn from `stream`: uniform on
/// the first state in the binary case, a flat Dirichlet via normalized
/// exponential draws otherwise.
pub fn draw_initial_belief(stream: &mut Stream, states: usize) -> Result<BeliefProfile> {
    if states == 2 {
        let u = stream.next_f64();
        return BeliefProfile::new(vec![u, 1.0 - u]);
    }
    let mut raw: Vec<f64> = (0..states)
        .map(|_| -(1.0 - stream.next_f64()).ln())
        .collect();
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        raw[0] = 1.0;
    }
    let total: f64 = raw.iter().sum();
    BeliefProfile::new(raw.iter().map(|x| x / total).collect::<Vec<_>>())
        .or_else(|_| BeliefProfile::uniform(states))
}

fn simulate_structures(
    config: &ExperimentConfig,
    structures: &[(f64, f64)],
    replicate: u64,
) -> Result<(Trajectory, u64)> {
    let states = StateSpace::binary();
    let world = config.world_structure()?;
    let graph_seed = derive_seed(config.master_seed, &[replicate, rng::role::GRAPH]);
    let net = generate_er(
        config.n,
        config.er_probability,
        graph_seed,
        crate::topology::DEFAULT_MAX_RETRIES,
    )?;
    let influence = uniform_influence(&net, config.gamma)?;

    let mut belief_stream = Stream::from_seed(derive_seed(
        config.master_seed,
        &[replicate, rng::role::INITIAL_BELIEFS],
    ));
    let mut specs = Vec::with_capacity(config.n);
    for &(alpha, beta) in structures {
        let structure = make_binary_structure(alpha, beta)?;
        let initial = draw_initial_belief(&mut belief_stream, states.len())?;
        specs.push(AgentSpec::new(structure, world.clone(), initial)?);
    }

    let rep_seed = derive_seed(config.master_seed, &[replicate]);
    let trajectory = run(
        &specs,
        &influence,
        states.real_state(),
        config.steps,
        rep_seed,
        config.record_every,
    )?;
    Ok((trajectory, graph_seed))
}

/// Runs one replicate of a simulation scenario, returning the trajectory and
/// its summary row.
pub fn run_one_replicate(
    config: &ExperimentConfig,
    replicate: usize,
) -> Result<(Trajectory, ReplicateStats)> {
    config.validate()?;
    if config.population.is_empty() {
        return Err(Error::Domain(format!(
            "scenario `{}` is a sweep; it has no population to simulate",
            config.scenario
        )));
    }
    let structures = placed_structures(config, replicate as u64);
    let (trajectory, graph_seed) = simulate_structures(config, &structures, replicate as u64)
        .map_err(|e| e.for_replicate(replicate))?;

    let last = trajectory
        .series
        .last()
        .expect("series has at least the initial record");
    let (rate_endpoint, rate_slope, converged_exactly) = if config.steps >= 1 {
        match learning_rate_estimate(&trajectory.series, (config.steps / 2, config.steps))
            .map_err(|e| e.for_replicate(replicate))?
        {
            RateEstimate::Estimate { endpoint, slope } => (Some(endpoint), Some(slope), false),
            RateEstimate::ConvergedExactly => (None, None, true),
        }
    } else {
        (None, None, false)
    };
    let stats = ReplicateStats {
        replicate,
        graph_seed,
        final_belief_uncertainty: last.belief_uncertainty,
        min_truth_belief: last.min_truth_belief,
        mean_truth_belief: last.mean_truth_belief,
        consensus_gap: last.consensus_gap,
        rate_endpoint,
        rate_slope,
        converged_exactly,
        clamped_entries: trajectory.metadata.clamped_entries,
    };
    Ok((trajectory, stats))
}

/// Runs every replicate of the scenario in parallel and aggregates.
pub fn run_replicates(config: &ExperimentConfig) -> Result<ReplicateSummary> {
    config.validate()?;
    let replicates: Vec<ReplicateStats> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| run_one_replicate(config, rep).map(|(_, stats)| stats))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = AggregateStats::from_replicates(&replicates);
    Ok(ReplicateSummary {
        scenario: config.scenario.clone(),
        master_seed: config.master_seed,
        replicates,
        aggregate,
    })
}

/// One conservative lattice cell of a speed sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedCell {
    pub alpha: f64,
    pub beta: f64,
    pub abs_k: f64,
    pub abs_log_e_final: f64,
}

/// A lattice cell excluded from the speed sweep, with its classification.
#[derive(Clone, Copy, Debug)]
pub struct SkippedCell {
    pub alpha: f64,
    pub beta: f64,
    pub agent_type: AgentType,
}

/// Speed-sweep output: one row per conservative cell plus the correlation
/// between `|k|` and `|ln e_T|` across rows.
#[derive(Clone, Debug)]
pub struct SpeedSweepResult {
    pub cells: Vec<SpeedCell>,
    pub skipped: Vec<SkippedCell>,
    pub pearson_r: f64,
}

/// For every conservative cell of the config's grid, runs a full network in
/// which all agents share that cell's structure, and reports `|k|` against
/// `|ln e_T|` at the final step. Non-conservative cells are skipped and
/// reported separately.
pub fn speed_sweep(config: &ExperimentConfig) -> Result<SpeedSweepResult> {
    config.validate()?;
    let grid = config
        .grid
        .ok_or_else(|| Error::Domain("speed sweep requires a grid".into()))?;
    if config.n < 2 || config.steps == 0 {
        return Err(Error::Domain(
            "speed sweep needs n >= 2 and at least one step".into(),
        ));
    }
    let world = config.world_structure()?;

    let mut lattice = Vec::with_capacity(grid.count * grid.count);
    for ai in 0..grid.count {
        for bi in 0..grid.count {
            lattice.push((lattice.len(), grid.point(ai), grid.point(bi)));
        }
    }

    enum CellOutcome {
        Ran(SpeedCell),
        Skipped(SkippedCell),
    }

    let outcomes: Vec<CellOutcome> = lattice
        .par_iter()
        .map(|&(index, alpha, beta)| -> Result<CellOutcome> {
            let structure = make_binary_structure(alpha, beta)?;
            let agent_type = classify_structure(&world, &structure, 0, DEFAULT_CLASSIFY_TOL)?;
            if agent_type != AgentType::Conservative {
                return Ok(CellOutcome::Skipped(SkippedCell {
                    alpha,
                    beta,
                    agent_type,
                }));
            }
            let structures = vec![(alpha, beta); config.n];
            let (trajectory, _) = simulate_structures(config, &structures, index as u64)?;
            let e_final = trajectory
                .series
                .last()
                .expect("series is non-empty")
                .belief_uncertainty;
            if e_final <= 0.0 {
                return Err(Error::Numerical(format!(
                    "cell ({alpha}, {beta}) converged exactly; |ln e| is unbounded"
                )));
            }
            let k = k_g(&world, &structure, 1, 0)?;
            Ok(CellOutcome::Ran(SpeedCell {
                alpha,
                beta,
                abs_k: k.abs(),
                abs_log_e_final: e_final.ln().abs(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            CellOutcome::Ran(cell) => cells.push(cell),
            CellOutcome::Skipped(cell) => skipped.push(cell),
        }
    }
    let xs: Vec<f64> = cells.iter().map(|c| c.abs_k).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.abs_log_e_final).collect();
    Ok(SpeedSweepResult {
        pearson_r: pearson(&xs, &ys),
        cells,
        skipped,
    })
}

/// Pearson correlation coefficient; NaN for degenerate inputs.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Classification of one population group against the config's world.
#[derive(Clone, Copy, Debug)]
pub struct GroupClassification {
    pub count: usize,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub k: f64,
    pub agent_type: AgentType,
}

/// Classifies every population group of a simulation config.
pub fn classify_population(config: &ExperimentConfig) -> Result<Vec<GroupClassification>> {
    config.validate()?;
    let world = config.world_structure()?;
    config
        .population
        .iter()
        .map(|group| {
            let l = make_binary_structure(group.alpha, group.beta)?;
            Ok(GroupClassification {
                count: group.count,
                alpha: group.alpha,
                beta: group.beta,
                h: h_g(&world, &l, 1, 0)?,
                k: k_g(&world, &l, 1, 0)?,
                agent_type: classify_structure(&world, &l, 0, DEFAULT_CLASSIFY_TOL)?,
            })
        })
        .collect()
}

/// The learning-rate bound of a conservative scenario, evaluated on the
/// named replicate's network and structure placement.
#[derive(Clone, Debug)]
pub struct RateBoundReport {
    pub graph_seed: u64,
    pub eigenvector: Vec<f64>,
    /// `sum_i v_i |k_i(m)|` per alternative state.
    pub weighted_abs_k: Vec<f64>,
    /// `gamma * min_m sum_i v_i |k_i(m)|`.
    pub bound: f64,
}

/// Computes the rate bound for a conservative population, using the same
/// network and placement the simulation of `replicate` would use.
pub fn rate_bound_report(config: &ExperimentConfig, replicate: usize) -> Result<RateBoundReport> {
    config.validate()?;
    if config.population.is_empty() {
        return Err(Error::Domain("rate bound needs a population".into()));
    }
    let world = config.world_structure()?;
    for group in classify_population(config)? {
        if group.agent_type != AgentType::Conservative {
            return Err(Error::Domain(format!(
                "population group ({}, {}) is {}: the bound holds only for conservative populations",
                group.alpha, group.beta, group.agent_type
            )));
        }
    }
    let structures = placed_structures(config, replicate as u64);
    let graph_seed = derive_seed(config.master_seed, &[replicate as u64, rng::role::GRAPH]);
    let net = generate_er(
        config.n,
        config.er_probability,
        graph_seed,
        crate::topology::DEFAULT_MAX_RETRIES,
    )?;
    let influence = uniform_influence(&net, config.gamma)?;
    let eigenvector = left_unit_eigenvector(
        &influence,
        crate::topology::DEFAULT_EIGEN_TOL,
        crate::topology::DEFAULT_EIGEN_MAX_ITER,
    )?;
    let k_values: Vec<Vec<f64>> = structures
        .iter()
        .map(|&(alpha, beta)| {
            let l = make_binary_structure(alpha, beta)?;
            Ok(vec![k_g(&world, &l, 1, 0)?])
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = crate::metrics::learning_rate_bound(config.gamma, &eigenvector, &k_values)?;
    let alt_states = k_values[0].len();
    let weighted_abs_k = (0..alt_states)
        .map(|m| {
            eigenvector
                .iter()
                .zip(&k_values)
                .map(|(&v, ks)| v * ks[m].abs())
                .sum()
        })
        .collect();
    Ok(RateBoundReport {
        graph_seed,
        eigenvector,
        weighted_abs_k,
        bound,
    })
}
