//! Shared fixtures and independent oracles for the integration tests.
//!
//! The oracles recompute model quantities from first principles with plain
//! loops — transition laws by enumerating every (arrival count, departure
//! subset) outcome, optimal values by finite-horizon backward induction over
//! those enumerations — so agreement with the crate is evidence, not
//! tautology.

#![allow(dead_code)] // each test binary uses its own subset

use std::collections::BTreeMap;

use rand::Rng;
use sliceorch::{Action, ScenarioConfig, SystemState};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// The default two-class scenario used throughout the experiment suite:
/// three resource pools of 4 units, both classes demanding 2 units each,
/// queues of 4, Bernoulli arrivals (0.35 GS / 0.85 BE), matching departure
/// probabilities, rewards 1.553 / 1, discount 0.9.
pub fn baseline_scenario() -> ScenarioConfig {
    ScenarioConfig {
        radio_capacity: 4,
        compute_capacity: 4,
        storage_capacity: 4,
        gs_demand: [2, 2, 2],
        be_demand: [2, 2, 2],
        gs_queue_capacity: 4,
        be_queue_capacity: 4,
        // Literal vectors (not 1−p arithmetic) so the in-code scenario is
        // bit-identical to the shipped JSON fixture.
        gs_arrival_dist: vec![0.65, 0.35],
        be_arrival_dist: vec![0.15, 0.85],
        gs_departure_prob: 0.35,
        be_departure_prob: 0.85,
        gs_reward: 1.553,
        be_reward: 1.0,
        discount: 0.9,
        departures_include_new: false,
    }
}

/// Baseline scenario with one or more fields overridden.
pub fn baseline_with(tweak: impl FnOnce(&mut ScenarioConfig)) -> ScenarioConfig {
    let mut cfg = baseline_scenario();
    tweak(&mut cfg);
    cfg.validate().expect("tweaked baseline must stay valid");
    cfg
}

/// P(one arrival) = p, else none.
pub fn bernoulli(p: f64) -> Vec<f64> {
    vec![1.0 - p, p]
}

// ---------------------------------------------------------------------------
// Enumeration oracles (no crate model code beyond the plain data types).
// ---------------------------------------------------------------------------

/// All valid states by direct quadruple loop, lexicographic in
/// (s_g, s_b, m_g, m_b).
pub fn oracle_states(cfg: &ScenarioConfig) -> Vec<SystemState> {
    let caps = [
        cfg.radio_capacity,
        cfg.compute_capacity,
        cfg.storage_capacity,
    ];
    let fits = |m_g: u32, m_b: u32| {
        (0..3).all(|i| m_g * cfg.gs_demand[i] + m_b * cfg.be_demand[i] <= caps[i])
    };
    let mut out = Vec::new();
    for s_g in 0..=cfg.gs_queue_capacity {
        for s_b in 0..=cfg.be_queue_capacity {
            for m_g in 0..=16 {
                for m_b in 0..=16 {
                    if fits(m_g, m_b) {
                        out.push(SystemState::new(s_g, s_b, m_g, m_b));
                    }
                }
            }
        }
    }
    out
}

/// All feasible actions by direct filter, ascending (a_b, a_g).
pub fn oracle_actions(cfg: &ScenarioConfig, state: SystemState) -> Vec<Action> {
    let caps = [
        cfg.radio_capacity,
        cfg.compute_capacity,
        cfg.storage_capacity,
    ];
    let free: Vec<u32> = (0..3)
        .map(|i| caps[i] - state.m_g * cfg.gs_demand[i] - state.m_b * cfg.be_demand[i])
        .collect();
    let mut out = Vec::new();
    for a_b in 0..=state.s_b {
        for a_g in 0..=state.s_g {
            if (0..3).all(|i| a_g * cfg.gs_demand[i] + a_b * cfg.be_demand[i] <= free[i]) {
                out.push(Action::new(a_g, a_b));
            }
        }
    }
    out.sort_by_key(|a| (a.a_b, a.a_g));
    out
}

/// One class's next-(queue, actives) distribution by enumerating every
/// departure subset as a bitmask — no binomial formula involved.
fn oracle_class_marginal(
    queue: u32,
    active: u32,
    admitted: u32,
    queue_cap: u32,
    arrival_dist: &[f64],
    departure_prob: f64,
    include_new: bool,
) -> BTreeMap<(u32, u32), f64> {
    let eligible = if include_new {
        active + admitted
    } else {
        active
    };
    assert!(
        eligible <= 20,
        "oracle bitmask enumeration needs small slice counts"
    );
    let mut out = BTreeMap::new();
    for (n, &p_n) in arrival_dist.iter().enumerate() {
        let next_queue = (queue - admitted + n as u32).min(queue_cap);
        for mask in 0u32..(1 << eligible) {
            let mut p_mask = p_n;
            for bit in 0..eligible {
                p_mask *= if mask >> bit & 1 == 1 {
                    departure_prob
                } else {
                    1.0 - departure_prob
                };
            }
            let departures = mask.count_ones();
            *out.entry((next_queue, active + admitted - departures))
                .or_insert(0.0) += p_mask;
        }
    }
    out
}

/// The GS class's (next queue, next actives) marginal on its own.
pub fn oracle_gs_marginal(
    cfg: &ScenarioConfig,
    state: SystemState,
    action: Action,
) -> BTreeMap<(u32, u32), f64> {
    oracle_class_marginal(
        state.s_g,
        state.m_g,
        action.a_g,
        cfg.gs_queue_capacity,
        &cfg.gs_arrival_dist,
        cfg.gs_departure_prob,
        cfg.departures_include_new,
    )
}

/// Exact next-state distribution by brute-force outcome enumeration.
pub fn oracle_transition(
    cfg: &ScenarioConfig,
    state: SystemState,
    action: Action,
) -> BTreeMap<SystemState, f64> {
    let gs = oracle_class_marginal(
        state.s_g,
        state.m_g,
        action.a_g,
        cfg.gs_queue_capacity,
        &cfg.gs_arrival_dist,
        cfg.gs_departure_prob,
        cfg.departures_include_new,
    );
    let be = oracle_class_marginal(
        state.s_b,
        state.m_b,
        action.a_b,
        cfg.be_queue_capacity,
        &cfg.be_arrival_dist,
        cfg.be_departure_prob,
        cfg.departures_include_new,
    );
    let mut out = BTreeMap::new();
    for (&(s_g, m_g), &p_g) in &gs {
        for (&(s_b, m_b), &p_b) in &be {
            *out.entry(SystemState::new(s_g, s_b, m_g, m_b))
                .or_insert(0.0) += p_g * p_b;
        }
    }
    out
}

/// Fully joint brute force — every (n_g, n_b, departure mask g, departure
/// mask b) outcome with its product probability, never factoring by class.
/// Slower than [`oracle_transition`]; used to confirm the product structure
/// itself on small instances.
pub fn oracle_transition_joint(
    cfg: &ScenarioConfig,
    state: SystemState,
    action: Action,
) -> BTreeMap<SystemState, f64> {
    let eligible = |m: u32, a: u32| if cfg.departures_include_new { m + a } else { m };
    let el_g = eligible(state.m_g, action.a_g);
    let el_b = eligible(state.m_b, action.a_b);
    assert!(
        el_g <= 10 && el_b <= 10,
        "joint oracle is for small instances"
    );
    let mask_prob = |mask: u32, bits: u32, p: f64| {
        (0..bits)
            .map(|b| if mask >> b & 1 == 1 { p } else { 1.0 - p })
            .product::<f64>()
    };
    let mut out = BTreeMap::new();
    for (n_g, &p_ng) in cfg.gs_arrival_dist.iter().enumerate() {
        for (n_b, &p_nb) in cfg.be_arrival_dist.iter().enumerate() {
            for mask_g in 0u32..(1 << el_g) {
                for mask_b in 0u32..(1 << el_b) {
                    let p = p_ng
                        * p_nb
                        * mask_prob(mask_g, el_g, cfg.gs_departure_prob)
                        * mask_prob(mask_b, el_b, cfg.be_departure_prob);
                    let next = SystemState::new(
                        (state.s_g - action.a_g + n_g as u32).min(cfg.gs_queue_capacity),
                        (state.s_b - action.a_b + n_b as u32).min(cfg.be_queue_capacity),
                        state.m_g + action.a_g - mask_g.count_ones(),
                        state.m_b + action.a_b - mask_b.count_ones(),
                    );
                    *out.entry(next).or_insert(0.0) += p;
                }
            }
        }
    }
    out
}

/// Optimal values by finite-horizon backward induction, horizon chosen from
/// the discounted-tail bound so the truncation error is below `tail_tol`.
///
/// Returns states (oracle enumeration order) with their values.
pub fn oracle_optimal_values(cfg: &ScenarioConfig, tail_tol: f64) -> (Vec<SystemState>, Vec<f64>) {
    // Candidate actions with reward and indexed transitions, fixed per state.
    type Candidate = (f64, Vec<(usize, f64)>);
    let states = oracle_states(cfg);
    let index: BTreeMap<SystemState, usize> =
        states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut candidates: Vec<Vec<Candidate>> = Vec::with_capacity(states.len());
    let mut r_max: f64 = 0.0;
    for &state in &states {
        let mut row = Vec::new();
        for action in oracle_actions(cfg, state) {
            let reward = action.a_g as f64 * cfg.gs_reward + action.a_b as f64 * cfg.be_reward;
            r_max = r_max.max(reward);
            let dist: Vec<(usize, f64)> = oracle_transition(cfg, state, action)
                .into_iter()
                .map(|(next, p)| (index[&next], p))
                .collect();
            row.push((reward, dist));
        }
        candidates.push(row);
    }
    let horizon = dp_horizon(cfg.discount, r_max, tail_tol);
    let mut values = vec![0.0; states.len()];
    for _ in 0..horizon {
        values = candidates
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(reward, dist)| {
                        reward
                            + cfg.discount * dist.iter().map(|&(j, p)| p * values[j]).sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    (states, values)
}

/// Smallest T with γ^T · r_max / (1−γ) ≤ tol.
pub fn dp_horizon(discount: f64, r_max: f64, tol: f64) -> u32 {
    if r_max == 0.0 {
        return 1;
    }
    let t = (tol * (1.0 - discount) / r_max).ln() / discount.ln();
    t.ceil().max(1.0) as u32
}

// ---------------------------------------------------------------------------
// Statistics helpers.
// ---------------------------------------------------------------------------

pub struct GofOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub dof: usize,
}

impl GofOutcome {
    pub fn passes(&self) -> bool {
        self.dof == 0 || self.statistic <= self.threshold
    }
}

/// Pearson chi-squared goodness of fit of observed counts against expected
/// probabilities. Bins with expected count < 5 are merged smallest-first
/// until all pass the rule of thumb; dof = bins − 1, and dof 0 (a
/// deterministic distribution) is an automatic pass.
pub fn chi_squared_gof(observed: &[u64], expected_probs: &[f64], alpha: f64) -> GofOutcome {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = expected_probs
        .iter()
        .zip(observed)
        .map(|(&p, &o)| (p * total as f64, o as f64))
        .collect();
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    while bins.len() > 1 && bins[0].0 < 5.0 {
        let (e, o) = bins.remove(0);
        bins[0].0 += e;
        bins[0].1 += o;
        bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let dof = bins.len() - 1;
    if dof == 0 {
        return GofOutcome {
            statistic: 0.0,
            threshold: f64::INFINITY,
            dof,
        };
    }
    let statistic = bins.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let threshold = ChiSquared::new(dof as f64)
        .expect("dof ≥ 1")
        .inverse_cdf(1.0 - alpha);
    GofOutcome {
        statistic,
        threshold,
        dof,
    }
}

/// Chi-squared goodness of fit of sampled next-states against the exact
/// transition distribution, for every feasible (state, action) pair of
/// `cfg`. Per-pair generators are derived from `master_seed` with
/// splitmix-style spacing. Returns one description per failed pair; a
/// sampled state outside the exact support is reported as a hard failure.
pub fn transition_battery(
    cfg: &ScenarioConfig,
    master_seed: u64,
    samples: u32,
    alpha: f64,
) -> Vec<String> {
    use sliceorch::sim::{step, SlotRng};
    let space = sliceorch::StateSpace::enumerate(cfg).unwrap();
    let mut failures = Vec::new();
    let mut pair_index = 0u64;
    for (_, state) in space.iter() {
        for action in sliceorch::state::feasible_actions(state, cfg) {
            let exact = sliceorch::transition_distribution(state, action, cfg, &space).unwrap();
            let support = exact.entries();
            let probs: Vec<f64> = support.iter().map(|&(_, p)| p).collect();
            let mut observed = vec![0u64; support.len()];
            let seed = master_seed ^ pair_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = SlotRng::new(seed);
            for _ in 0..samples {
                let next = space
                    .encode(step(state, action, cfg, &mut rng).next)
                    .unwrap();
                match support.binary_search_by_key(&next, |&(j, _)| j) {
                    Ok(pos) => observed[pos] += 1,
                    Err(_) => {
                        failures.push(format!(
                            "{state:?} / {action:?}: sampled state outside the exact support"
                        ));
                        break;
                    }
                }
            }
            let gof = chi_squared_gof(&observed, &probs, alpha);
            if !gof.passes() {
                failures.push(format!(
                    "{state:?} / {action:?}: χ² = {:.2} > {:.2} (dof {})",
                    gof.statistic, gof.threshold, gof.dof
                ));
            }
            pair_index += 1;
        }
    }
    failures
}

/// Standard error of the mean by non-overlapping batch means, for
/// autocorrelated per-slot series.
pub fn batch_means_se(samples: &[f64], batches: usize) -> (f64, f64) {
    assert!(batches >= 2 && samples.len() >= 2 * batches);
    let batch_len = samples.len() / batches;
    let used = batch_len * batches;
    let mean = samples[..used].iter().sum::<f64>() / used as f64;
    let batch_means: Vec<f64> = (0..batches)
        .map(|b| {
            samples[b * batch_len..(b + 1) * batch_len]
                .iter()
                .sum::<f64>()
                / batch_len as f64
        })
        .collect();
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (batches as f64 - 1.0);
    (mean, (var / batches as f64).sqrt())
}

// ---------------------------------------------------------------------------
// Random scenario generation (seeded by the caller for reproducibility).
// ---------------------------------------------------------------------------

fn random_demand(rng: &mut impl Rng) -> [u32; 3] {
    loop {
        let d = [
            rng.random_range(0..=2),
            rng.random_range(0..=2),
            rng.random_range(0..=2),
        ];
        if d != [0, 0, 0] {
            return d;
        }
    }
}

fn random_arrival_dist(rng: &mut impl Rng) -> Vec<f64> {
    if rng.random_range(0..5) == 0 {
        // occasional three-point distribution (up to 2 arrivals/slot)
        let raw = [
            rng.random_range(0.05..1.0),
            rng.random_range(0.05..1.0),
            rng.random_range(0.05..1.0),
        ];
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    } else {
        bernoulli(rng.random_range(0.05..0.95))
    }
}

/// A small random valid scenario: |S| ≤ 50 and at most 120 (state, action)
/// pairs, so brute-force oracles stay cheap.
pub fn random_scenario(rng: &mut impl Rng) -> ScenarioConfig {
    loop {
        let caps = [
            rng.random_range(1..=4),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        ];
        let cfg = ScenarioConfig {
            radio_capacity: caps[0],
            compute_capacity: caps[1],
            storage_capacity: caps[2],
            gs_demand: random_demand(rng),
            be_demand: random_demand(rng),
            gs_queue_capacity: rng.random_range(1..=3),
            be_queue_capacity: rng.random_range(1..=3),
            gs_arrival_dist: random_arrival_dist(rng),
            be_arrival_dist: random_arrival_dist(rng),
            gs_departure_prob: rng.random_range(0.05..=1.0),
            be_departure_prob: rng.random_range(0.05..=1.0),
            gs_reward: rng.random_range(0.1..3.0),
            be_reward: rng.random_range(0.1..3.0),
            discount: rng.random_range(0.5..0.95),
            departures_include_new: rng.random_range(0..4) == 0,
        };
        if cfg.validate().is_err() {
            continue;
        }
        let states = oracle_states(&cfg);
        let pairs: usize = states.iter().map(|&s| oracle_actions(&cfg, s).len()).sum();
        if states.len() <= 50 && pairs <= 120 {
            return cfg;
        }
    }
}
