use crate::state::{Action, SystemState};

/// Errors surfaced by model construction, solving, analysis, and simulation.
///
/// `InvalidConfig` and `Io` are caller mistakes; `UnconvergedValueIteration`
/// and `UnconvergedStationary` are numerical outcomes the caller may want to
/// distinguish (the CLI maps them to a dedicated exit code).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("action ({},{}) is infeasible in state ({},{},{},{})",
        action.a_g, action.a_b, state.s_g, state.s_b, state.m_g, state.m_b)]
    InfeasibleAction { state: SystemState, action: Action },

    #[error("state ({},{},{},{}) is not part of this scenario's state space",
        .0.s_g, .0.s_b, .0.m_g, .0.m_b)]
    UnknownState(SystemState),

    #[error("policy does not cover state index {0}")]
    PolicyNotTotal(usize),

    #[error("value iteration did not converge within {iterations} iterations (last residual {residual:.3e})")]
    UnconvergedValueIteration { iterations: u32, residual: f64 },

    #[error("stationary distribution did not converge within {iterations} power iterations (last residual {residual:.3e})")]
    UnconvergedStationary { iterations: u64, residual: f64 },

    #[error("closed-form drop probability requires Bernoulli arrivals (distribution over {{0,1}}); {side} arrival distribution has length {len}")]
    UnsupportedArrivalModel { side: &'static str, len: usize },

    #[error(
        "transition row for state index {state_index} sums to {sum:.17} (must be 1 within 1e-12)"
    )]
    NonStochasticRow { state_index: usize, sum: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
