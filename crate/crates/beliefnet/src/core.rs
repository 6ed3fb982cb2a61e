//! Validated domain types shared by every other module.
//!
//! All four value types are immutable after construction and either satisfy
//! their invariants or refuse to construct with a typed [`Error`]. Probability
//! sums are checked against [`PROB_TOL`] at construction time and against the
//! looser [`BELIEF_TOL`] for evolved beliefs, which accumulate float drift and
//! are renormalized after every update step.

use crate::{Error, Result};

/// Tolerance for probability sums at construction time.
pub const PROB_TOL: f64 = 1e-12;

/// Tolerance for probability sums of evolved belief profiles.
pub const BELIEF_TOL: f64 = 1e-9;

/// Strict-positivity floor for signal-distribution and likelihood entries.
///
/// A zero likelihood on the real state would irreversibly zero the real-state
/// belief on a single observation, so entries must clear this floor.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;

/// Floor applied to positive belief entries during updates; entries that decay
/// below it are clamped before renormalization so no positive belief can
/// underflow to a hard zero. Exact zeros are preserved.
pub const BELIEF_FLOOR: f64 = 1e-300;

/// The finite set of candidate world states, with one designated real state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
    real_state: usize,
}

impl StateSpace {
    /// At least two distinct labels; `real_state` must index into them.
    pub fn new(labels: Vec<String>, real_state: usize) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Domain(format!(
                "state space needs at least 2 states (got {})",
                labels.len()
            )));
        }
        if real_state >= labels.len() {
            return Err(Error::Domain(format!(
                "real state index {} out of range for {} states",
                real_state,
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::Domain(format!("duplicate state label `{a}`")));
            }
        }
        Ok(StateSpace { labels, real_state })
    }

    /// The two-state space used by all shipped scenarios; state 0 is real.
    pub fn binary() -> Self {
        StateSpace {
            labels: vec!["theta1".into(), "theta2".into()],
            real_state: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires >= 2 states
    }

    pub fn real_state(&self) -> usize {
        self.real_state
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// The true distribution generating an agent's signals (the world signal
/// structure `g`). Entries are strictly positive and sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldSignalStructure {
    probabilities: Vec<f64>,
}

impl WorldSignalStructure {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Domain("signal space must be non-empty".into()));
        }
        for (i, &p) in probabilities.iter().enumerate() {
            if !(p.is_finite() && p >= LIKELIHOOD_FLOOR) {
                return Err(Error::Domain(format!(
                    "world signal probability {p} at index {i} is below the positivity floor {LIKELIHOOD_FLOOR}"
                )));
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Domain(format!(
                "world signal probabilities sum to {sum}, expected 1 within {PROB_TOL}"
            )));
        }
        Ok(WorldSignalStructure { probabilities })
    }

    /// The binary world `[g_high, 1 - g_high]`.
    pub fn binary(g_high: f64) -> Result<Self> {
        if !(g_high > 0.0 && g_high < 1.0) {
            return Err(Error::Parameter {
                name: "g_high",
                reason: format!("must lie in the open interval (0, 1), got {g_high}"),
            });
        }
        Self::new(vec![g_high, 1.0 - g_high])
    }

    /// Number of signals `K`.
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, signal: usize) -> f64 {
        self.probabilities[signal]
    }
}

/// An agent's private likelihood model: a `K x M` matrix whose column `m` is
/// the distribution the agent believes signals follow under state `m`.
///
/// Stored column-major; every column sums to one and every entry clears
/// [`LIKELIHOOD_FLOOR`].
#[derive(Clone, Debug, PartialEq)]
pub struct PrivateSignalStructure {
    // column-major: entry (signal s, state m) at [m * signals + s]
    likelihoods: Vec<f64>,
    signals: usize,
    states: usize,
}

impl PrivateSignalStructure {
    /// Builds a structure from per-state likelihood columns.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::Domain(format!(
                "private signal structure needs at least 2 state columns (got {})",
                columns.len()
            )));
        }
        let signals = columns[0].len();
        if signals == 0 {
            return Err(Error::Domain("signal space must be non-empty".into()));
        }
        let mut likelihoods = Vec::with_capacity(signals * columns.len());
        for (m, col) in columns.iter().enumerate() {
            if col.len() != signals {
                return Err(Error::Domain(format!(
                    "likelihood column {m} has length {} but column 0 has length {signals}",
                    col.len()
                )));
            }
            for (s, &x) in col.iter().enumerate() {
                if !(x.is_finite() && x >= LIKELIHOOD_FLOOR) {
                    return Err(Error::Domain(format!(
                        "likelihood {x} at (signal {s}, state {m}) is below the positivity floor {LIKELIHOOD_FLOOR}"
                    )));
                }
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::Domain(format!(
                    "likelihood column {m} sums to {sum}, expected 1 within {PROB_TOL}"
                )));
            }
            likelihoods.extend_from_slice(col);
        }
        Ok(PrivateSignalStructure {
            likelihoods,
            signals,
            states: columns.len(),
        })
    }

    /// Number of signals `K`.
    pub fn signal_count(&self) -> usize {
        self.signals
    }

    /// Number of states `M`.
    pub fn state_count(&self) -> usize {
        self.states
    }

    /// Likelihood of `signal` under state `state`.
    #[inline]
    pub fn likelihood(&self, signal: usize, state: usize) -> f64 {
        self.likelihoods[state * self.signals + signal]
    }

    /// The likelihood column for `state`.
    #[inline]
    pub fn column(&self, state: usize) -> &[f64] {
        &self.likelihoods[state * self.signals..(state + 1) * self.signals]
    }

    /// For a 2x2 structure, the pair `(alpha, beta)` of high-signal
    /// likelihoods it was built from.
    pub fn binary_parameters(&self) -> Option<(f64, f64)> {
        (self.signals == 2 && self.states == 2)
            .then(|| (self.likelihood(0, 0), self.likelihood(0, 1)))
    }
}

/// Builds the 2x2 structure `[[alpha, beta], [1-alpha, 1-beta]]`: signal 0 has
/// likelihood `alpha` under state 0 and `beta` under state 1.
pub fn make_binary_structure(alpha: f64, beta: f64) -> Result<PrivateSignalStructure> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Parameter {
                name,
                reason: format!("must lie in the open interval (0, 1), got {v}"),
            });
        }
    }
    PrivateSignalStructure::from_columns(vec![vec![alpha, 1.0 - alpha], vec![beta, 1.0 - beta]])
}

/// A probability distribution over the state set expressing an agent's
/// credence in each state.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefProfile {
    beliefs: Vec<f64>,
}

impl BeliefProfile {
    /// Entries must be non-negative and sum to 1 within [`BELIEF_TOL`].
    pub fn new(beliefs: Vec<f64>) -> Result<Self> {
        if beliefs.len() < 2 {
            return Err(Error::Domain(format!(
                "belief profile needs at least 2 states (got {})",
                beliefs.len()
            )));
        }
        for (m, &b) in beliefs.iter().enumerate() {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Domain(format!(
                    "belief {b} on state {m} is not a probability"
                )));
            }
        }
        let sum: f64 = beliefs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_TOL {
            return Err(Error::Domain(format!(
                "beliefs sum to {sum}, expected 1 within {BELIEF_TOL}"
            )));
        }
        Ok(BeliefProfile { beliefs })
    }

    /// Point mass on `state`.
    pub fn point_mass(state: usize, states: usize) -> Result<Self> {
        if state >= states {
            return Err(Error::Domain(format!(
                "state {state} out of range for {states} states"
            )));
        }
        let mut beliefs = vec![0.0; states];
        beliefs[state] = 1.0;
        Self::new(beliefs)
    }

    /// Uniform profile over `states` states.
    pub fn uniform(states: usize) -> Result<Self> {
        Self::new(vec![1.0 / states as f64; states.max(1)])
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    #[inline]
    pub fn belief(&self, state: usize) -> f64 {
        self.beliefs[state]
    }

    /// Builds a profile from raw update output: positive entries below
    /// [`BELIEF_FLOOR`] are clamped (exact zeros pass through, so point
    /// masses remain fixed points), then the vector is divided by its sum.
    ///
    /// Returns the profile, the number of clamped entries, and the absolute
    /// deviation of the pre-normalization sum from 1.
    pub(crate) fn finalize(mut raw: Vec<f64>) -> Result<(Self, u64, f64)> {
        let mut clamped = 0u64;
        let mut sum = 0.0;
        for x in raw.iter_mut() {
            if !x.is_finite() || *x < 0.0 {
                return Err(Error::Numerical(format!(
                    "belief update produced non-probability value {x}"
                )));
            }
            if *x > 0.0 && *x < BELIEF_FLOOR {
                *x = BELIEF_FLOOR;
                clamped += 1;
            }
            sum += *x;
        }
        let deviation = (sum - 1.0).abs();
        if sum < BELIEF_FLOOR {
            return Err(Error::Numerical(format!(
                "belief mass underflow: update sum {sum}"
            )));
        }
        for x in raw.iter_mut() {
            *x /= sum;
        }
        Ok((BeliefProfile { beliefs: raw }, clamped, deviation))
    }
}

/// Agent type induced by the signs of the `h` and `k` measures against the
/// world signal structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentType {
    /// `k < 0` for every alternative state: learns the real state almost
    /// surely, alone or networked.
    Conservative,
    /// `h < 0` for every alternative but `k > 0` for some: learns alone in
    /// probability, yet can leave a network uncertain.
    Radical,
    /// `h > 0` for some alternative: learns a wrong state when isolated.
    Negative,
    /// Some `|h|` (or, for a positive structure, `|k|`) falls within the
    /// classification tolerance band: observationally equivalent states.
    Boundary,
}

impl std::fmt::Display for AgentType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AgentType::Conservative => "Conservative",
            AgentType::Radical => "Radical",
            AgentType::Negative => "Negative",
            AgentType::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

/// Checks one influence row: entries non-negative, summing to 1 within
/// [`PROB_TOL`], with a strictly positive self-weight at `self_index`.
pub fn validate_influence_row(weights: &[f64], self_index: usize) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Domain("influence row must be non-empty".into()));
    }
    if self_index >= weights.len() {
        return Err(Error::Domain(format!(
            "self index {self_index} out of range for row of length {}",
            weights.len()
        )));
    }
    for (j, &w) in weights.iter().enumerate() {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::StochasticityViolation(format!(
                "weight {w} at index {j} is negative or non-finite"
            )));
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::StochasticityViolation(format!(
            "row sums to {sum}, expected 1 within {PROB_TOL}"
        )));
    }
    if weights[self_index] <= 0.0 {
        return Err(Error::SelfRelianceViolation {
            value: weights[self_index],
        });
    }
    Ok(())
}
