//! Deterministic simulation of non-Bayesian social learning with imperfect
//! private signal structures.
//!
//! Agents on a strongly connected network each hold a belief profile over a
//! finite set of world states. In every step an agent observes a private
//! signal, forms a Bayesian update against its own (possibly wrong) likelihood
//! model, and averages that update with its neighbors' last reported beliefs.
//! Whether the network collectively learns the real state depends on two
//! information measures of each agent's signal structure:
//!
//! * `h` — the expected log-likelihood ratio per observation between an
//!   alternative state and the real state,
//! * `k` — the log of the expected likelihood ratio itself.
//!
//! Their signs split agents into *conservative* (`k < 0`), *radical*
//! (`h < 0 < k`) and *negative* (`h > 0`) types, with a *boundary* band for
//! observationally equivalent structures. Conservative populations converge
//! almost surely; radical populations can stall; negative agents learn a wrong
//! state when isolated.
//!
//! The crate is organized around that story:
//!
//! * [`core`] — validated domain types (signal structures, belief profiles).
//! * [`classify`] — the `h`/`k` measures, agent typing, and region sweeps
//!   over the binary (α, β) parameter square.
//! * [`topology`] — Erdős–Rényi network generation, influence matrices, and
//!   their left unit eigenvector.
//! * [`dynamics`] — the synchronous belief-update engine.
//! * [`metrics`] — belief uncertainty, learning-rate estimation and bounds,
//!   and exact drift diagnostics.
//! * [`harness`] — scenario presets, replicate orchestration, and parameter
//!   sweeps.
//! * [`rng`] — the seed-derivation scheme that makes every run replayable
//!   bit for bit.
//!
//! All simulation entry points take an explicit 64-bit seed; identical seeds
//! produce identical trajectories on every platform.

pub mod classify;
pub mod core;
pub mod dynamics;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod topology;

pub use crate::core::{
    make_binary_structure, validate_influence_row, AgentType, BeliefProfile,
    PrivateSignalStructure, StateSpace, WorldSignalStructure,
};

/// Result alias used throughout the library.
pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar argument fell outside its admissible range.
    #[error("parameter `{name}` {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An influence row has a non-positive self-weight.
    #[error("self-reliance violation: self-weight must be strictly positive (got {value})")]
    SelfRelianceViolation { value: f64 },

    /// An influence row is not a probability distribution.
    #[error("stochasticity violation: {0}")]
    StochasticityViolation(String),

    /// An influence row places weight on an agent outside the neighbor set.
    #[error("support violation: positive weight on non-neighbor {target}")]
    SupportViolation { target: usize },

    /// Inputs are structurally inconsistent (dimension or index mismatch).
    #[error("{0}")]
    Domain(String),

    /// Random graph generation exhausted its retry budget.
    #[error("graph generation failed: no connected draw within {attempts} attempts")]
    Generation { attempts: usize },

    /// An iterative solve did not reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A floating-point quantity left its representable working range.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Error with the index of the offending agent attached.
    #[error("agent {agent}: {source}")]
    Agent {
        agent: usize,
        #[source]
        source: Box<Error>,
    },

    /// Error with the index of the offending replicate attached.
    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the agent index it belongs to.
    pub fn for_agent(self, agent: usize) -> Error {
        Error::Agent {
            agent,
            source: Box::new(self),
        }
    }

    /// Wraps the error with the replicate index it belongs to.
    pub fn for_replicate(self, replicate: usize) -> Error {
        Error::Replicate {
            replicate,
            source: Box::new(self),
        }
    }
}
