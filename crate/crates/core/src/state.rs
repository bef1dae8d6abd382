//! State and action spaces of the admission-control chain.
//!
//! A state is (s_g, s_b, m_g, m_b): the two queue occupancies plus the number
//! of active slices of each class. Free resources are derived, not stored:
//!
//! ```text
//! free = capacity − m_g·gs_demand − m_b·be_demand   (componentwise)
//! ```
//!
//! Tracking the slice-count pair rather than the aggregate free-resource
//! vector keeps the chain Markov when the two classes depart at different
//! rates: the future of the resource pool depends on *which* class holds the
//! units, not just how many are held.
//!
//! Actions (a_g, a_b) admit requests from the queues. The canonical action
//! ordering used everywhere (feasible-action lists, argmax tie-breaking,
//! index maps) is ascending (a_b, a_g).

use std::collections::HashMap;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Queue occupancies and active slice counts, the full Markov state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    /// Requests waiting in the GS queue, 0..=gs_queue_capacity.
    pub s_g: u32,
    /// Requests waiting in the BE queue, 0..=be_queue_capacity.
    pub s_b: u32,
    /// Active GS slices.
    pub m_g: u32,
    /// Active BE slices.
    pub m_b: u32,
}

impl SystemState {
    pub fn new(s_g: u32, s_b: u32, m_g: u32, m_b: u32) -> Self {
        Self { s_g, s_b, m_g, m_b }
    }

    /// The empty system: no queued requests, no active slices.
    pub fn empty() -> Self {
        Self::new(0, 0, 0, 0)
    }

    /// Resource units not held by active slices: [radio, compute, storage].
    /// Valid states never underflow (enforced by `StateSpace::enumerate`).
    pub fn free_resources(&self, cfg: &ScenarioConfig) -> [u32; 3] {
        let caps = cfg.capacities();
        std::array::from_fn(|i| caps[i] - self.m_g * cfg.gs_demand[i] - self.m_b * cfg.be_demand[i])
    }
}

/// Admission counts for one slot: a_g GS requests and a_b BE requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub a_g: u32,
    pub a_b: u32,
}

impl Action {
    pub const NONE: Action = Action { a_g: 0, a_b: 0 };

    pub fn new(a_g: u32, a_b: u32) -> Self {
        Self { a_g, a_b }
    }

    /// Immediate admission reward: a_g·gs_reward + a_b·be_reward.
    pub fn reward(&self, cfg: &ScenarioConfig) -> f64 {
        f64::from(self.a_g) * cfg.gs_reward + f64::from(self.a_b) * cfg.be_reward
    }
}

/// Every feasible action in `state`, in canonical order (ascending (a_b, a_g)).
///
/// Feasible means: a_g ≤ s_g, a_b ≤ s_b, and the admitted slices fit into the
/// currently free resources componentwise. (0,0) is always included.
pub fn feasible_actions(state: SystemState, cfg: &ScenarioConfig) -> Vec<Action> {
    let free = state.free_resources(cfg);
    let mut out = Vec::new();
    // Loop order yields ascending (a_b, a_g) directly.
    for a_b in 0..=state.s_b {
        for a_g in 0..=state.s_g {
            let fits = (0..3).all(|i| a_g * cfg.gs_demand[i] + a_b * cfg.be_demand[i] <= free[i]);
            if fits {
                out.push(Action::new(a_g, a_b));
            } else {
                break; // demands are nonnegative: larger a_g cannot fit either
            }
        }
    }
    out
}

/// The enumerated state space with a bijective index.
///
/// States are ordered lexicographically by (s_g, s_b, m_g, m_b); index 0 is
/// always the empty system (0,0,0,0).
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<SystemState>,
    index: HashMap<SystemState, usize>,
}

impl StateSpace {
    /// Validates the config and enumerates every state whose slice counts fit
    /// the capacities.
    pub fn enumerate(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let pairs = feasible_slice_counts(cfg);
        let mut states = Vec::new();
        for s_g in 0..=cfg.gs_queue_capacity {
            for s_b in 0..=cfg.be_queue_capacity {
                for &(m_g, m_b) in &pairs {
                    states.push(SystemState::new(s_g, s_b, m_g, m_b));
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State at index `i`. Panics on out-of-range indices (programming error).
    pub fn decode(&self, i: usize) -> SystemState {
        self.states[i]
    }

    /// Index of `state`, or `Error::UnknownState`.
    pub fn encode(&self, state: SystemState) -> Result<usize> {
        self.index
            .get(&state)
            .copied()
            .ok_or(Error::UnknownState(state))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SystemState)> + '_ {
        self.states.iter().copied().enumerate()
    }

    /// Index of the empty system (0,0,0,0) — the canonical start state.
    pub fn empty_state_index(&self) -> usize {
        0
    }
}

/// All (m_g, m_b) pairs whose combined demand fits the capacities,
/// lexicographically ordered.
fn feasible_slice_counts(cfg: &ScenarioConfig) -> Vec<(u32, u32)> {
    let caps = cfg.capacities();
    let fits = |m_g: u32, m_b: u32| {
        (0..3).all(|i| m_g * cfg.gs_demand[i] + m_b * cfg.be_demand[i] <= caps[i])
    };
    let mut pairs = Vec::new();
    let mut m_g = 0;
    while fits(m_g, 0) {
        let mut m_b = 0;
        while fits(m_g, m_b) {
            pairs.push((m_g, m_b));
            m_b += 1;
        }
        m_g += 1;
    }
    pairs
}

/// Bijection between 1-based action indices and the actions of a scenario.
///
/// The table lists every action feasible in the most permissive state (full
/// queues, no active slices) in canonical order; that set contains the
/// feasible actions of every other state.
#[derive(Debug, Clone)]
pub struct ActionTable {
    actions: Vec<Action>,
}

impl ActionTable {
    pub fn build(cfg: &ScenarioConfig) -> Self {
        let top = SystemState::new(cfg.gs_queue_capacity, cfg.be_queue_capacity, 0, 0);
        Self {
            actions: feasible_actions(top, cfg),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// 1-based index of `action`, if the scenario admits it anywhere.
    pub fn index_of(&self, action: Action) -> Option<usize> {
        self.actions
            .iter()
            .position(|&a| a == action)
            .map(|i| i + 1)
    }

    /// Action at 1-based `index`.
    pub fn get(&self, index: usize) -> Option<Action> {
        if index == 0 {
            return None;
        }
        self.actions.get(index - 1).copied()
    }

    /// Actions in index order (index 1 first).
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }
}
