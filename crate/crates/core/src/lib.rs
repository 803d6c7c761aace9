//! Simulator and audit harness for the N-interactions random graph.
//!
//! At every step `N` vertices interact and become a clique. With probability
//! `p` one of them is new; the old participants are chosen either by clique
//! weight (preferential attachment) or uniformly. The crate evolves the graph
//! ([`evolution`]), computes one-step laws exactly on small graphs
//! ([`oracle`]), audits the martingales that drive the growth laws and
//! estimates the exponents ([`analysis`]), and bundles those checks into a
//! reproducible battery ([`verify`]).

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod math;
pub mod oracle;
pub mod params;
pub mod sampler;
pub mod snapshot;
pub mod verify;

pub use error::{Error, Result};
pub use evolution::{
    participation_probability, run, run_with_state, step, Branch, BranchCounts, Checkpoint,
    CheckpointSchedule, RunOptions, Simulation, StepOutcome, TrajectoryRecord,
};
pub use graph::{CliqueKey, CliqueRegistry, Field, GraphState, Label, VertexRecord};
pub use params::{
    derive_coefficients, require_positive_alpha, Coefficients, ModelParams, ParamWarning,
};
pub use sampler::{RngStream, WeightedIndex, GENERATOR_ID};

/// Version string written into output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
