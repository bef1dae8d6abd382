//! Discounted-reward solvers: value iteration and the myopic baseline.

use std::io::Write;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::state::{feasible_actions, Action, ActionTable, StateSpace};
use crate::transition::{transition_distribution, TransitionDistribution};

/// Stopping rule for the fixed-point iterations.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Sup-norm residual below which iteration stops.
    pub epsilon: f64,
    /// Hard cap on sweeps; exceeding it is an error, not a warning.
    pub max_iterations: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            epsilon: 1e-6,
            max_iterations: 100_000,
        }
    }
}

/// A deterministic stationary policy together with its value estimate.
#[derive(Debug, Clone)]
pub struct Policy {
    /// Action chosen in each state, indexed like the state space.
    pub actions: Vec<Action>,
    /// Discounted value of each state under this policy.
    pub values: Vec<f64>,
    /// Sweeps the producing iteration took.
    pub iterations: u32,
    /// Final sup-norm residual of that iteration.
    pub residual: f64,
}

/// Per-state candidate list: each feasible action with its immediate reward
/// and exact next-state distribution. Built once, reused every sweep.
struct CandidateTable {
    per_state: Vec<Vec<(Action, f64, TransitionDistribution)>>,
}

impl CandidateTable {
    fn build(cfg: &ScenarioConfig, space: &StateSpace) -> Result<Self> {
        let mut per_state = Vec::with_capacity(space.len());
        for (_, state) in space.iter() {
            let mut row = Vec::new();
            for action in feasible_actions(state, cfg) {
                let dist = transition_distribution(state, action, cfg, space)?;
                row.push((action, action.reward(cfg), dist));
            }
            per_state.push(row);
        }
        Ok(CandidateTable { per_state })
    }
}

/// One Bellman optimality sweep: returns the updated values and, per state,
/// the maximizing action (first in canonical order on ties).
///
/// Exposed so contraction and monotonicity can be checked directly.
pub fn bellman_sweep(
    values: &[f64],
    cfg: &ScenarioConfig,
    space: &StateSpace,
) -> Result<(Vec<f64>, Vec<Action>)> {
    let table = CandidateTable::build(cfg, space)?;
    Ok(sweep_with(&table, values, cfg.discount))
}

fn sweep_with(table: &CandidateTable, values: &[f64], discount: f64) -> (Vec<f64>, Vec<Action>) {
    let mut next = Vec::with_capacity(values.len());
    let mut argmax = Vec::with_capacity(values.len());
    for candidates in &table.per_state {
        let mut best_value = f64::NEG_INFINITY;
        let mut best_action = Action::NONE;
        // Candidates come out of `feasible_actions` in canonical order, so a
        // strict `>` keeps the lowest-index action on exact ties.
        for (action, reward, dist) in candidates {
            let q = reward + discount * dist.expectation(values);
            if q > best_value {
                best_value = q;
                best_action = *action;
            }
        }
        next.push(best_value);
        argmax.push(best_action);
    }
    (next, argmax)
}

/// Solve for the optimal policy by value iteration from V ≡ 0.
///
/// Stops when the sup-norm change between sweeps drops below
/// `settings.epsilon`; exceeding `settings.max_iterations` first is an
/// `UnconvergedValueIteration` error carrying the last residual.
pub fn value_iteration(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    settings: &SolverSettings,
) -> Result<Policy> {
    let table = CandidateTable::build(cfg, space)?;
    let mut values = vec![0.0; space.len()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=settings.max_iterations {
        let (next, argmax) = sweep_with(&table, &values, cfg.discount);
        residual = sup_distance(&values, &next);
        values = next;
        if residual < settings.epsilon {
            return Ok(Policy {
                actions: argmax,
                values,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::UnconvergedValueIteration {
        iterations: settings.max_iterations,
        residual,
    })
}

/// The myopic baseline: in every state pick the feasible action with the
/// largest immediate reward, preferring more guaranteed-service admissions
/// and then more best-effort admissions on exact ties.
///
/// Its `values` field is the policy's true discounted value, computed by
/// fixed-policy successive approximation under the same stopping rule.
pub fn greedy_policy(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    settings: &SolverSettings,
) -> Result<Policy> {
    let mut actions = Vec::with_capacity(space.len());
    for (_, state) in space.iter() {
        let chosen = feasible_actions(state, cfg)
            .into_iter()
            .max_by(|x, y| {
                x.reward(cfg)
                    .partial_cmp(&y.reward(cfg))
                    .expect("rewards are finite")
                    .then(x.a_g.cmp(&y.a_g))
                    .then(x.a_b.cmp(&y.a_b))
            })
            .expect("the empty action is always feasible");
        actions.push(chosen);
    }
    let (values, iterations, residual) = evaluate_actions(&actions, cfg, space, settings)?;
    Ok(Policy {
        actions,
        values,
        iterations,
        residual,
    })
}

/// Discounted value of a fixed action assignment, by successive approximation.
fn evaluate_actions(
    actions: &[Action],
    cfg: &ScenarioConfig,
    space: &StateSpace,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, u32, f64)> {
    let mut rows = Vec::with_capacity(space.len());
    for (i, state) in space.iter() {
        let dist = transition_distribution(state, actions[i], cfg, space)?;
        rows.push((actions[i].reward(cfg), dist));
    }
    let mut values = vec![0.0; space.len()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=settings.max_iterations {
        let next: Vec<f64> = rows
            .iter()
            .map(|(reward, dist)| reward + cfg.discount * dist.expectation(&values))
            .collect();
        residual = sup_distance(&values, &next);
        values = next;
        if residual < settings.epsilon {
            return Ok((values, iteration, residual));
        }
    }
    Err(Error::UnconvergedValueIteration {
        iterations: settings.max_iterations,
        residual,
    })
}

/// Q-values of every feasible action in `state` against a value function.
pub fn q_values(
    state: crate::state::SystemState,
    values: &[f64],
    cfg: &ScenarioConfig,
    space: &StateSpace,
) -> Result<Vec<(Action, f64)>> {
    let mut out = Vec::new();
    for action in feasible_actions(state, cfg) {
        let dist = transition_distribution(state, action, cfg, space)?;
        out.push((
            action,
            action.reward(cfg) + cfg.discount * dist.expectation(values),
        ));
    }
    Ok(out)
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Write a policy as CSV, one row per state:
/// `state_index,s_g,s_b,m_g,m_b,action_index,a_g,a_b,value`.
///
/// `action_index` is the 1-based position of the action in the canonical
/// scenario-wide action table.
pub fn write_policy_csv<W: Write>(
    writer: W,
    policy: &Policy,
    space: &StateSpace,
    table: &ActionTable,
) -> Result<()> {
    if policy.actions.len() != space.len() {
        return Err(Error::PolicyNotTotal(policy.actions.len().min(space.len())));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "state_index",
        "s_g",
        "s_b",
        "m_g",
        "m_b",
        "action_index",
        "a_g",
        "a_b",
        "value",
    ])?;
    for (i, state) in space.iter() {
        let action = policy.actions[i];
        let index = table
            .index_of(action)
            .ok_or(Error::InfeasibleAction { state, action })?;
        w.write_record([
            i.to_string(),
            state.s_g.to_string(),
            state.s_b.to_string(),
            state.m_g.to_string(),
            state.m_b.to_string(),
            index.to_string(),
            action.a_g.to_string(),
            action.a_b.to_string(),
            crate::numfmt::fmt_sig(policy.values[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
