//! Monte-Carlo slot simulator for a fixed policy.
//!
//! Each slot replays the model's event order exactly: read the state, apply
//! the policy action and collect its reward, sample arrivals (overflow beyond
//! queue capacity is counted as drops), sample departures among eligible
//! slices, advance. Everything the analysis module computes in closed form
//! is measured here empirically, so the two pipelines can be cross-checked.
//!
//! Randomness contract: all draws come from ChaCha8 seeded with the run's
//! 64-bit seed, split into four fixed streams — 0: guaranteed-service
//! arrivals, 1: best-effort arrivals, 2: guaranteed-service departures,
//! 3: best-effort departures. Arrivals consume one uniform per slot per
//! class; departures consume one uniform per eligible slice (independent
//! coin flips, which keeps the conservation ledger per-slice). Identical
//! (config, policy, seed, horizon) ⇒ bit-identical trajectories.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;
use crate::solver::Policy;
use crate::state::{Action, StateSpace, SystemState};

/// Run controls for one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct SimulationSettings {
    /// Total slots simulated.
    pub horizon: u64,
    /// Leading slots excluded from metrics (must be < horizon).
    pub warmup: u64,
    /// Seed for the stream-split ChaCha8 generator.
    pub seed: u64,
}

/// The four named random streams (see module docs for the split).
pub struct SlotRng {
    gs_arrivals: ChaCha8Rng,
    be_arrivals: ChaCha8Rng,
    gs_departures: ChaCha8Rng,
    be_departures: ChaCha8Rng,
}

impl SlotRng {
    pub fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        SlotRng {
            gs_arrivals: stream(0),
            be_arrivals: stream(1),
            gs_departures: stream(2),
            be_departures: stream(3),
        }
    }
}

/// Inverse-CDF draw from a finite distribution over {0, 1, …}.
fn sample_count(dist: &[f64], rng: &mut ChaCha8Rng) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (n, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return n as u32;
        }
    }
    // Round-off can leave acc marginally below 1; the draw is in the tail.
    (dist.len() - 1) as u32
}

/// Independent per-slice completion flips: Binomial(eligible, p) by counting.
fn sample_departures(eligible: u32, p: f64, rng: &mut ChaCha8Rng) -> u32 {
    (0..eligible).filter(|_| rng.random::<f64>() < p).count() as u32
}

/// Everything sampled in one slot, for tracing and ledger accounting.
#[derive(Debug, Clone, Copy)]
pub struct SlotOutcome {
    pub next: SystemState,
    pub arr_g: u32,
    pub arr_b: u32,
    pub drop_g: u32,
    pub drop_b: u32,
    pub dep_g: u32,
    pub dep_b: u32,
    pub reward: f64,
}

/// Sample one slot from `state` under `action`.
///
/// The action must be feasible in `state`; the sampled next-state frequency
/// over many calls matches the exact transition distribution.
pub fn step(
    state: SystemState,
    action: Action,
    cfg: &ScenarioConfig,
    rng: &mut SlotRng,
) -> SlotOutcome {
    debug_assert!(
        crate::state::feasible_actions(state, cfg).contains(&action),
        "step called with infeasible action"
    );
    let arr_g = sample_count(&cfg.gs_arrival_dist, &mut rng.gs_arrivals);
    let arr_b = sample_count(&cfg.be_arrival_dist, &mut rng.be_arrivals);

    let room_g = state.s_g - action.a_g + arr_g;
    let room_b = state.s_b - action.a_b + arr_b;
    let next_sg = room_g.min(cfg.gs_queue_capacity);
    let next_sb = room_b.min(cfg.be_queue_capacity);
    let drop_g = room_g - next_sg;
    let drop_b = room_b - next_sb;

    let eligible_g = if cfg.departures_include_new {
        state.m_g + action.a_g
    } else {
        state.m_g
    };
    let eligible_b = if cfg.departures_include_new {
        state.m_b + action.a_b
    } else {
        state.m_b
    };
    let dep_g = sample_departures(eligible_g, cfg.gs_departure_prob, &mut rng.gs_departures);
    let dep_b = sample_departures(eligible_b, cfg.be_departure_prob, &mut rng.be_departures);

    SlotOutcome {
        next: SystemState::new(
            next_sg,
            next_sb,
            state.m_g + action.a_g - dep_g,
            state.m_b + action.a_b - dep_b,
        ),
        arr_g,
        arr_b,
        drop_g,
        drop_b,
        dep_g,
        dep_b,
        reward: action.reward(cfg),
    }
}

/// Empirical counterpart of an [`EvaluationReport`](crate::analysis::EvaluationReport),
/// accumulated over the post-warmup window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationMetrics {
    /// Measured slots (horizon − warmup).
    pub slots: u64,
    /// Mean admission reward per measured slot.
    pub avg_reward: f64,
    pub gs_arrivals: u64,
    pub be_arrivals: u64,
    pub gs_admissions: u64,
    pub be_admissions: u64,
    pub gs_drops: u64,
    pub be_drops: u64,
    pub gs_departures: u64,
    pub be_departures: u64,
    /// drops / arrivals per class; 0/0 reported as 0.
    pub gs_drop_fraction: f64,
    pub be_drop_fraction: f64,
    /// Slot-start occupancies averaged over measured slots.
    pub mean_sg: f64,
    pub mean_sb: f64,
    pub mean_mg: f64,
    pub mean_mb: f64,
    /// State at the first measured slot's start.
    pub window_start: SystemState,
    /// State after the last measured slot.
    pub window_end: SystemState,
}

impl SimulationMetrics {
    /// Dropped arrivals per measured slot — the empirical analogue of the
    /// analysis module's exact drop probability.
    pub fn gs_drop_rate(&self) -> f64 {
        self.gs_drops as f64 / self.slots as f64
    }

    pub fn be_drop_rate(&self) -> f64 {
        self.be_drops as f64 / self.slots as f64
    }

    /// Integer conservation over the measured window, per class:
    /// arrivals = admissions + drops + queue growth, and
    /// active-slice growth = admissions − departures.
    pub fn conservation_ledger_balances(&self) -> bool {
        let queue = |arr: u64, adm: u64, drop: u64, s0: u32, s1: u32| {
            arr as i64 == adm as i64 + drop as i64 + (s1 as i64 - s0 as i64)
        };
        let active =
            |adm: u64, dep: u64, m0: u32, m1: u32| m1 as i64 - m0 as i64 == adm as i64 - dep as i64;
        queue(
            self.gs_arrivals,
            self.gs_admissions,
            self.gs_drops,
            self.window_start.s_g,
            self.window_end.s_g,
        ) && queue(
            self.be_arrivals,
            self.be_admissions,
            self.be_drops,
            self.window_start.s_b,
            self.window_end.s_b,
        ) && active(
            self.gs_admissions,
            self.gs_departures,
            self.window_start.m_g,
            self.window_end.m_g,
        ) && active(
            self.be_admissions,
            self.be_departures,
            self.window_start.m_b,
            self.window_end.m_b,
        )
    }
}

/// Simulate `settings.horizon` slots from the empty system under `policy`,
/// reporting metrics over the post-warmup window.
pub fn simulate(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    policy: &Policy,
    settings: &SimulationSettings,
) -> Result<SimulationMetrics> {
    simulate_with(cfg, space, policy, settings, |_, _, _, _| Ok(()))
}

/// [`simulate`], invoking `observer(slot, state, action, outcome)` for every
/// slot, warmup included. Observer errors abort the run.
pub fn simulate_with<F>(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    policy: &Policy,
    settings: &SimulationSettings,
    mut observer: F,
) -> Result<SimulationMetrics>
where
    F: FnMut(u64, SystemState, Action, &SlotOutcome) -> Result<()>,
{
    if settings.horizon == 0 || settings.warmup >= settings.horizon {
        return Err(Error::InvalidConfig {
            field: "horizon",
            reason: format!(
                "horizon ({}) must exceed warmup ({})",
                settings.horizon, settings.warmup
            ),
        });
    }
    if policy.actions.len() != space.len() {
        return Err(Error::PolicyNotTotal(policy.actions.len().min(space.len())));
    }
    let mut rng = SlotRng::new(settings.seed);
    let mut state = SystemState::empty();
    let mut window_start = state;
    let mut totals = Totals::default();
    for slot in 0..settings.horizon {
        if slot == settings.warmup {
            window_start = state;
        }
        let action = policy.actions[space.encode(state)?];
        let outcome = step(state, action, cfg, &mut rng);
        observer(slot, state, action, &outcome)?;
        if slot >= settings.warmup {
            totals.absorb(state, action, &outcome);
        }
        state = outcome.next;
    }
    Ok(totals.finish(settings, window_start, state))
}

/// Running sums over the measured window.
#[derive(Default)]
struct Totals {
    reward: f64,
    arr: [u64; 2],
    adm: [u64; 2],
    drop: [u64; 2],
    dep: [u64; 2],
    occupancy: [f64; 4],
}

impl Totals {
    fn absorb(&mut self, state: SystemState, action: Action, outcome: &SlotOutcome) {
        self.reward += outcome.reward;
        self.arr[0] += outcome.arr_g as u64;
        self.arr[1] += outcome.arr_b as u64;
        self.adm[0] += action.a_g as u64;
        self.adm[1] += action.a_b as u64;
        self.drop[0] += outcome.drop_g as u64;
        self.drop[1] += outcome.drop_b as u64;
        self.dep[0] += outcome.dep_g as u64;
        self.dep[1] += outcome.dep_b as u64;
        self.occupancy[0] += state.s_g as f64;
        self.occupancy[1] += state.s_b as f64;
        self.occupancy[2] += state.m_g as f64;
        self.occupancy[3] += state.m_b as f64;
    }

    fn finish(
        self,
        settings: &SimulationSettings,
        window_start: SystemState,
        window_end: SystemState,
    ) -> SimulationMetrics {
        let slots = settings.horizon - settings.warmup;
        let fraction = |drops: u64, arrivals: u64| {
            if arrivals == 0 {
                0.0
            } else {
                drops as f64 / arrivals as f64
            }
        };
        let n = slots as f64;
        SimulationMetrics {
            slots,
            avg_reward: self.reward / n,
            gs_arrivals: self.arr[0],
            be_arrivals: self.arr[1],
            gs_admissions: self.adm[0],
            be_admissions: self.adm[1],
            gs_drops: self.drop[0],
            be_drops: self.drop[1],
            gs_departures: self.dep[0],
            be_departures: self.dep[1],
            gs_drop_fraction: fraction(self.drop[0], self.arr[0]),
            be_drop_fraction: fraction(self.drop[1], self.arr[1]),
            mean_sg: self.occupancy[0] / n,
            mean_sb: self.occupancy[1] / n,
            mean_mg: self.occupancy[2] / n,
            mean_mb: self.occupancy[3] / n,
            window_start,
            window_end,
        }
    }
}

/// Streaming per-slot trace writer with header
/// `slot,s_g,s_b,m_g,m_b,a_g,a_b,arr_g,arr_b,drop_g,drop_b,dep_g,dep_b,reward`.
pub struct TraceWriter<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(writer);
        writer.write_record([
            "slot", "s_g", "s_b", "m_g", "m_b", "a_g", "a_b", "arr_g", "arr_b", "drop_g", "drop_b",
            "dep_g", "dep_b", "reward",
        ])?;
        Ok(TraceWriter { writer })
    }

    pub fn record(
        &mut self,
        slot: u64,
        state: SystemState,
        action: Action,
        outcome: &SlotOutcome,
    ) -> Result<()> {
        self.writer.write_record([
            slot.to_string(),
            state.s_g.to_string(),
            state.s_b.to_string(),
            state.m_g.to_string(),
            state.m_b.to_string(),
            action.a_g.to_string(),
            action.a_b.to_string(),
            outcome.arr_g.to_string(),
            outcome.arr_b.to_string(),
            outcome.drop_g.to_string(),
            outcome.drop_b.to_string(),
            outcome.dep_g.to_string(),
            outcome.dep_b.to_string(),
            fmt_sig(outcome.reward),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}
