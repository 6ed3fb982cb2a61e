//! The belief-update engine: signal sampling, Bayesian self-updates, social
//! averaging, and synchronous stepping.
//!
//! One step updates every agent against the frozen time-`t` snapshot:
//!
//! ```text
//! mu'(m) = a_ii * mu(m) * l^m(s) / d(s)  +  sum_j a_ij * mu_j(m)
//! ```
//!
//! where `d(s) = sum_m l^m(s) mu(m)` is the one-step forecast of the fresh
//! signal `s`. Every agent draws its signal from its own derived stream, so
//! the update order within a step cannot affect the result. Updated profiles
//! are renormalized each step; the pre-normalization deviation and any
//! belief-floor clamps are tallied in the trajectory metadata.

use crate::core::{BeliefProfile, PrivateSignalStructure, WorldSignalStructure, BELIEF_FLOOR};
use crate::metrics::MetricSeries;
use crate::rng::{self, derive_seed, Fingerprint, Stream};
use crate::topology::InfluenceMatrix;
use crate::{Error, Result};

/// Everything fixed about one agent: its likelihood model, the true signal
/// distribution it observes, and its starting belief.
#[derive(Clone, Debug)]
pub struct AgentSpec {
    pub structure: PrivateSignalStructure,
    pub world: WorldSignalStructure,
    pub initial_belief: BeliefProfile,
}

impl AgentSpec {
    pub fn new(
        structure: PrivateSignalStructure,
        world: WorldSignalStructure,
        initial_belief: BeliefProfile,
    ) -> Result<Self> {
        if structure.signal_count() != world.len() {
            return Err(Error::Domain(format!(
                "structure has {} signal rows but world has {} signals",
                structure.signal_count(),
                world.len()
            )));
        }
        if structure.state_count() != initial_belief.len() {
            return Err(Error::Domain(format!(
                "structure has {} state columns but belief has {} entries",
                structure.state_count(),
                initial_belief.len()
            )));
        }
        Ok(AgentSpec {
            structure,
            world,
            initial_belief,
        })
    }
}

/// All agents' beliefs at one time step, plus the signals that produced them
/// (absent at `t = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub t: usize,
    pub beliefs: Vec<BeliefProfile>,
    pub last_signals: Option<Vec<usize>>,
}

/// Replay and health information attached to a [`Trajectory`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryMetadata {
    /// Seed the run was keyed by (per-agent streams derive from it).
    pub seed: u64,
    /// Fingerprint of every input to the run; replaying with an identical
    /// configuration reproduces the trajectory bit for bit.
    pub config_hash: u64,
    /// Number of belief entries clamped at [`BELIEF_FLOOR`] across the run.
    pub clamped_entries: u64,
    /// Largest pre-normalization deviation `|sum - 1|` seen in any update.
    pub max_normalization_deviation: f64,
}

/// A recorded run: a (possibly thinned) list of states, the per-step metric
/// series, and replay metadata.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<SimulationState>,
    pub series: MetricSeries,
    pub metadata: TrajectoryMetadata,
}

/// Per-step health tallies produced by [`network_step`].
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub clamped_entries: u64,
    pub max_normalization_deviation: f64,
}

/// Draws one signal index from `g` by inverse CDF over cumulative sums in
/// ascending index order.
pub fn sample_signal(g: &WorldSignalStructure, stream: &mut Stream) -> usize {
    let u = stream.next_f64();
    let mut cum = 0.0;
    for (idx, &p) in g.probabilities().iter().enumerate() {
        cum += p;
        if u < cum {
            return idx;
        }
    }
    g.len() - 1
}

/// The agent's predicted probability of signal `s`: the belief-weighted
/// mixture of its likelihood columns.
pub fn one_step_forecast(l: &PrivateSignalStructure, mu: &BeliefProfile, s: usize) -> f64 {
    (0..l.state_count())
        .map(|m| l.likelihood(s, m) * mu.belief(m))
        .sum()
}

fn bayes_factors(l: &PrivateSignalStructure, mu: &BeliefProfile, s: usize) -> Result<(f64, usize)> {
    if s >= l.signal_count() {
        return Err(Error::Domain(format!(
            "signal {s} out of range for {} signals",
            l.signal_count()
        )));
    }
    let d = one_step_forecast(l, mu, s);
    if d < BELIEF_FLOOR {
        return Err(Error::Numerical(format!(
            "one-step forecast underflow: d = {d}"
        )));
    }
    Ok((d, l.state_count()))
}

/// Pure Bayesian update of an isolated agent: `mu'(m) = mu(m) l^m(s) / d(s)`.
pub fn isolated_update(
    l: &PrivateSignalStructure,
    mu: &BeliefProfile,
    s: usize,
) -> Result<BeliefProfile> {
    let (d, states) = bayes_factors(l, mu, s)?;
    let raw: Vec<f64> = (0..states)
        .map(|m| mu.belief(m) * l.likelihood(s, m) / d)
        .collect();
    let (profile, _, _) = BeliefProfile::finalize(raw)?;
    Ok(profile)
}

/// Networked update of one agent. `weights[0]` is the self-weight and
/// `weights[1..]` align one-to-one with `neighbor_beliefs`; the row must pass
/// [`crate::core::validate_influence_row`] at index 0.
pub fn agent_update(
    l: &PrivateSignalStructure,
    mu_self: &BeliefProfile,
    neighbor_beliefs: &[&BeliefProfile],
    weights: &[f64],
    s: usize,
) -> Result<BeliefProfile> {
    let (profile, _) = agent_update_with_stats(l, mu_self, neighbor_beliefs, weights, s)?;
    Ok(profile)
}

fn agent_update_with_stats(
    l: &PrivateSignalStructure,
    mu_self: &BeliefProfile,
    neighbor_beliefs: &[&BeliefProfile],
    weights: &[f64],
    s: usize,
) -> Result<(BeliefProfile, StepStats)> {
    if weights.len() != neighbor_beliefs.len() + 1 {
        return Err(Error::Domain(format!(
            "{} weights for {} neighbors (expected {})",
            weights.len(),
            neighbor_beliefs.len(),
            neighbor_beliefs.len() + 1
        )));
    }
    crate::core::validate_influence_row(weights, 0)?;
    let (d, states) = bayes_factors(l, mu_self, s)?;
    for (idx, nb) in neighbor_beliefs.iter().enumerate() {
        if nb.len() != states {
            return Err(Error::Domain(format!(
                "neighbor {idx} has {} states, expected {states}",
                nb.len()
            )));
        }
    }
    let self_weight = weights[0];
    let mut raw = Vec::with_capacity(states);
    for m in 0..states {
        let mut value = self_weight * mu_self.belief(m) * l.likelihood(s, m) / d;
        for (w, nb) in weights[1..].iter().zip(neighbor_beliefs) {
            value += w * nb.belief(m);
        }
        raw.push(value);
    }
    let (profile, clamped, deviation) = BeliefProfile::finalize(raw)?;
    Ok((
        profile,
        StepStats {
            clamped_entries: clamped,
            max_normalization_deviation: deviation,
        },
    ))
}

/// Advances the whole network one synchronous step: signals are drawn per
/// agent in ascending index order from that agent's own stream, then every
/// agent updates against the frozen time-`t` beliefs.
pub fn network_step(
    state: &SimulationState,
    specs: &[AgentSpec],
    influence: &InfluenceMatrix,
    streams: &mut [Stream],
) -> Result<(SimulationState, StepStats)> {
    let n = specs.len();
    if state.beliefs.len() != n || influence.n() != n || streams.len() != n {
        return Err(Error::Domain(format!(
            "inconsistent sizes: {} beliefs, {} specs, {} influence rows, {} streams",
            state.beliefs.len(),
            n,
            influence.n(),
            streams.len()
        )));
    }
    let signals: Vec<usize> = (0..n)
        .map(|i| sample_signal(&specs[i].world, &mut streams[i]))
        .collect();

    let mut beliefs = Vec::with_capacity(n);
    let mut stats = StepStats::default();
    for i in 0..n {
        let row = influence.row(i);
        let mut weights = Vec::with_capacity(8);
        let mut neighbors: Vec<&BeliefProfile> = Vec::with_capacity(8);
        weights.push(row[i]);
        for (j, &w) in row.iter().enumerate() {
            if j != i && w > 0.0 {
                weights.push(w);
                neighbors.push(&state.beliefs[j]);
            }
        }
        let (profile, s) = agent_update_with_stats(
            &specs[i].structure,
            &state.beliefs[i],
            &neighbors,
            &weights,
            signals[i],
        )
        .map_err(|e| e.for_agent(i))?;
        stats.clamped_entries += s.clamped_entries;
        stats.max_normalization_deviation = stats
            .max_normalization_deviation
            .max(s.max_normalization_deviation);
        beliefs.push(profile);
    }
    Ok((
        SimulationState {
            t: state.t + 1,
            beliefs,
            last_signals: Some(signals),
        },
        stats,
    ))
}

fn fingerprint_inputs(
    specs: &[AgentSpec],
    influence: &InfluenceMatrix,
    real_state: usize,
    steps: usize,
    seed: u64,
    record_every: usize,
) -> u64 {
    let mut fp = Fingerprint::new();
    fp.write_usize(specs.len());
    fp.write_usize(real_state);
    fp.write_usize(steps);
    fp.write_usize(record_every);
    fp.write_u64(seed);
    for spec in specs {
        fp.write_usize(spec.structure.signal_count());
        fp.write_usize(spec.structure.state_count());
        for m in 0..spec.structure.state_count() {
            for &x in spec.structure.column(m) {
                fp.write_f64(x);
            }
        }
        for &x in spec.world.probabilities() {
            fp.write_f64(x);
        }
        for &x in spec.initial_belief.beliefs() {
            fp.write_f64(x);
        }
    }
    for i in 0..influence.n() {
        for &w in influence.row(i) {
            fp.write_f64(w);
        }
    }
    fp.finish()
}

/// Runs `steps` synchronous updates from the specs' initial beliefs.
///
/// States at `t = 0`, every `record_every`-th step, and the final step are
/// retained; the metric series covers every step. Per-agent signal streams
/// derive from `seed` as `derive_seed(seed, [role::SIGNALS, agent])`, so the
/// whole trajectory is a pure function of its arguments.
///
/// `real_state` selects the belief index reported as truth by the metric
/// series. At least one agent must start with positive belief on it.
pub fn run(
    specs: &[AgentSpec],
    influence: &InfluenceMatrix,
    real_state: usize,
    steps: usize,
    seed: u64,
    record_every: usize,
) -> Result<Trajectory> {
    let n = specs.len();
    if n == 0 {
        return Err(Error::Domain("at least one agent required".into()));
    }
    if influence.n() != n {
        return Err(Error::Domain(format!(
            "influence matrix is {}x{0} but there are {n} agents",
            influence.n()
        )));
    }
    if record_every == 0 {
        return Err(Error::Parameter {
            name: "record_every",
            reason: "must be at least 1".into(),
        });
    }
    let states_count = specs[0].structure.state_count();
    for (i, spec) in specs.iter().enumerate() {
        if spec.structure.state_count() != states_count {
            return Err(Error::Domain("agents disagree on the state count".into()).for_agent(i));
        }
    }
    if real_state >= states_count {
        return Err(Error::Domain(format!(
            "real state {real_state} out of range for {states_count} states"
        )));
    }
    if !specs
        .iter()
        .any(|spec| spec.initial_belief.belief(real_state) > 0.0)
    {
        return Err(Error::Domain(
            "no agent starts with positive belief on the real state".into(),
        ));
    }

    let mut streams: Vec<Stream> = (0..n)
        .map(|i| Stream::from_seed(derive_seed(seed, &[rng::role::SIGNALS, i as u64])))
        .collect();

    let mut state = SimulationState {
        t: 0,
        beliefs: specs.iter().map(|s| s.initial_belief.clone()).collect(),
        last_signals: None,
    };
    let mut series = MetricSeries::new(real_state);
    series.record(0, &state.beliefs);

    let mut recorded = vec![state.clone()];
    let mut clamped_total = 0u64;
    let mut max_deviation = 0.0f64;
    for t in 1..=steps {
        let (next, stats) = network_step(&state, specs, influence, &mut streams)?;
        clamped_total += stats.clamped_entries;
        max_deviation = max_deviation.max(stats.max_normalization_deviation);
        state = next;
        series.record(t, &state.beliefs);
        if t % record_every == 0 || t == steps {
            recorded.push(state.clone());
        }
    }

    Ok(Trajectory {
        states: recorded,
        series,
        metadata: TrajectoryMetadata {
            seed,
            config_hash: fingerprint_inputs(
                specs,
                influence,
                real_state,
                steps,
                seed,
                record_every,
            ),
            clamped_entries: clamped_total,
            max_normalization_deviation: max_deviation,
        },
    })
}
