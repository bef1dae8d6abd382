//! Exact one-slot transition distributions.
//!
//! Slot event order (fixed across solver, analysis, and simulator):
//!
//!   observe state → admit (a_g, a_b) and collect the reward
//!     → arrivals n_t join each queue, overflow beyond capacity is dropped:
//!         s_t' = min(s_t − a_t + n_t, Q_t)
//!     → departures: each eligible slice completes independently w.p. p_l^t:
//!         m_t' = m_t + a_t − k_t,  k_t ~ Binomial(eligible_t, p_l^t)
//!
//! where eligible_t is the slice count at slot start (m_t), or m_t + a_t when
//! `departures_include_new` is set. The two classes evolve independently, so
//! the joint distribution is the product of the per-class marginals.

use crate::config::{ScenarioConfig, PROBABILITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::solver::Policy;
use crate::state::{feasible_actions, Action, StateSpace, SystemState};

/// Sparse probability vector over next-state indices.
///
/// Entries are index-sorted, duplicate-free, nonnegative, and sum to 1
/// within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution {
    entries: Vec<(usize, f64)>,
}

impl TransitionDistribution {
    /// Build a distribution from raw `(index, probability)` pairs.
    ///
    /// Pairs are sorted and duplicate indices merged; zero-mass entries are
    /// dropped so the sparse invariants hold for hand-built rows too.
    pub fn from_entries(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (j, p) in entries {
            debug_assert!(p >= 0.0, "negative probability {p} at index {j}");
            match merged.last_mut() {
                Some((last, mass)) if *last == j => *mass += p,
                _ => merged.push((j, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        TransitionDistribution { entries: merged }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Probability mass on next-state index `j` (0 if absent).
    pub fn probability_of(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&j, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    /// Σ_j p_j · v[j] — one row of the P·v product.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, p)| p * v[j]).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }
}

/// One class's marginal: distribution of (next queue, next active count).
fn class_marginal(
    queue: u32,
    active: u32,
    admitted: u32,
    queue_cap: u32,
    arrival_dist: &[f64],
    departure_prob: f64,
    include_new: bool,
) -> Vec<((u32, u32), f64)> {
    let eligible = if include_new {
        active + admitted
    } else {
        active
    };
    let dep = binomial_pmf(eligible, departure_prob);
    let mut out = Vec::with_capacity(arrival_dist.len() * dep.len());
    for (n, &p_n) in arrival_dist.iter().enumerate() {
        if p_n == 0.0 {
            continue;
        }
        let next_queue = (queue - admitted + n as u32).min(queue_cap);
        for (k, &p_k) in dep.iter().enumerate() {
            if p_k == 0.0 {
                continue;
            }
            let next_active = active + admitted - k as u32;
            out.push(((next_queue, next_active), p_n * p_k));
        }
    }
    out
}

/// Binomial(n, p) probability mass function as a vector indexed by k.
fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n as usize + 1];
    pmf[0] = 1.0;
    // One Bernoulli factor at a time keeps every term exact-by-construction.
    for _ in 0..n {
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    pmf
}

/// Exact distribution of the next state given `state` and a feasible `action`.
pub fn transition_distribution(
    state: SystemState,
    action: Action,
    cfg: &ScenarioConfig,
    space: &StateSpace,
) -> Result<TransitionDistribution> {
    if !feasible_actions(state, cfg).contains(&action) {
        return Err(Error::InfeasibleAction { state, action });
    }
    let gs = class_marginal(
        state.s_g,
        state.m_g,
        action.a_g,
        cfg.gs_queue_capacity,
        &cfg.gs_arrival_dist,
        cfg.gs_departure_prob,
        cfg.departures_include_new,
    );
    let be = class_marginal(
        state.s_b,
        state.m_b,
        action.a_b,
        cfg.be_queue_capacity,
        &cfg.be_arrival_dist,
        cfg.be_departure_prob,
        cfg.departures_include_new,
    );
    // Joint = product of the independent class marginals.
    let mut dense: Vec<f64> = vec![0.0; space.len()];
    for &((s_g, m_g), p_g) in &gs {
        for &((s_b, m_b), p_b) in &be {
            let j = space.encode(SystemState::new(s_g, s_b, m_g, m_b))?;
            dense[j] += p_g * p_b;
        }
    }
    let entries: Vec<(usize, f64)> = dense
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let dist = TransitionDistribution { entries };
    debug_assert!((dist.total_mass() - 1.0).abs() <= PROBABILITY_TOLERANCE);
    Ok(dist)
}

/// Row-stochastic transition matrix under a fixed policy: row i is the
/// distribution of the next state from state i under policy action π(i).
///
/// Every row sum is audited against 1 within 1e-12.
pub fn build_transition_matrix(
    policy: &Policy,
    space: &StateSpace,
    cfg: &ScenarioConfig,
) -> Result<Vec<TransitionDistribution>> {
    if policy.actions.len() != space.len() {
        return Err(Error::PolicyNotTotal(policy.actions.len().min(space.len())));
    }
    let mut rows = Vec::with_capacity(space.len());
    for (i, state) in space.iter() {
        let row = transition_distribution(state, policy.actions[i], cfg, space)?;
        let sum = row.total_mass();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::NonStochasticRow {
                state_index: i,
                sum,
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
