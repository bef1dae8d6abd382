//! Admission control for two request classes (guaranteed-service and
//! best-effort) sharing finite radio, compute, and storage capacity.
//!
//! The system is a discrete-time MDP: each slot the controller admits some
//! queued requests (collecting a per-admission reward), new requests arrive,
//! and active slices depart. `state`/`transition` build the exact model,
//! `solver` computes optimal and myopic policies, `analysis` derives
//! steady-state performance in closed form, and `sim` measures the same
//! quantities by seeded Monte-Carlo as an independent check.

pub mod analysis;
pub mod config;
pub mod error;
pub mod numfmt;
pub mod sim;
pub mod solver;
pub mod state;
pub mod transition;

pub use analysis::{evaluate, EvaluationReport, StationaryDistribution};
pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use sim::{simulate, SimulationMetrics, SimulationSettings};
pub use solver::{greedy_policy, value_iteration, Policy, SolverSettings};
pub use state::{Action, ActionTable, StateSpace, SystemState};
pub use transition::{transition_distribution, TransitionDistribution};
