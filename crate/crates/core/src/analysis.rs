//! Steady-state analysis of a fixed policy.
//!
//! The policy-induced chain here may be periodic (e.g. deterministic
//! arrivals), so plain power iteration need not settle pointwise. The
//! stationary distribution is therefore taken as the limit of Cesàro
//! (running-average) windows of the power sequence, with the window doubled
//! until two consecutive window averages agree.

use std::io::Write;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;
use crate::solver::Policy;
use crate::state::StateSpace;
use crate::transition::{build_transition_matrix, TransitionDistribution};

/// Two consecutive window averages must agree to this L1 distance.
const WINDOW_TOLERANCE: f64 = 1e-10;
/// The accepted average must satisfy ‖φP − φ‖₁ below this.
const RESIDUAL_TOLERANCE: f64 = 1e-8;
const INITIAL_WINDOW: u64 = 64;
const MAX_WINDOW: u64 = 1 << 20;
const MAX_POWER_STEPS: u64 = 100_000_000;

/// Stationary distribution of a policy-induced chain.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// Long-run occupancy probability of each state, indexed like the space.
    pub probabilities: Vec<f64>,
    /// ‖φP − φ‖₁ of the accepted vector.
    pub residual: f64,
    /// Power steps consumed before acceptance.
    pub steps: u64,
}

/// φ ← φ·P for a sparse row-major matrix.
fn advance(rows: &[TransitionDistribution], phi: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (i, row) in rows.iter().enumerate() {
        let mass = phi[i];
        if mass == 0.0 {
            continue;
        }
        for (j, p) in row.iter() {
            out[j] += mass * p;
        }
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Stationary distribution of the chain `rows`, started from `start`.
///
/// The start state determines which closed class the distribution describes
/// when the chain has transient states; evaluation starts from the empty
/// system, matching the simulator.
pub fn stationary_distribution(
    rows: &[TransitionDistribution],
    start: usize,
) -> Result<StationaryDistribution> {
    let n = rows.len();
    let mut phi = vec![0.0; n];
    phi[start] = 1.0;
    let mut next = vec![0.0; n];
    let mut avg = vec![0.0; n];
    let mut check = vec![0.0; n];
    let mut prev_avg: Option<Vec<f64>> = None;
    let mut window = INITIAL_WINDOW;
    let mut steps: u64 = 0;
    let mut residual = f64::INFINITY;
    while steps < MAX_POWER_STEPS {
        avg.fill(0.0);
        for _ in 0..window {
            for (a, p) in avg.iter_mut().zip(&phi) {
                *a += p;
            }
            advance(rows, &phi, &mut next);
            std::mem::swap(&mut phi, &mut next);
        }
        for a in &mut avg {
            *a /= window as f64;
        }
        advance(rows, &avg, &mut check);
        residual = l1_distance(&check, &avg);
        if let Some(prev) = &prev_avg {
            if l1_distance(&avg, prev) < WINDOW_TOLERANCE && residual < RESIDUAL_TOLERANCE {
                return Ok(StationaryDistribution {
                    probabilities: avg,
                    residual,
                    steps,
                });
            }
        }
        prev_avg = Some(avg.clone());
        steps += window;
        window = (window * 2).min(MAX_WINDOW);
    }
    Err(Error::UnconvergedStationary {
        iterations: steps,
        residual,
    })
}

/// Expected per-slot admission reward in steady state: Σᵢ φᵢ · r(π(i)).
pub fn average_reward(policy: &Policy, phi: &[f64], cfg: &ScenarioConfig) -> f64 {
    policy
        .actions
        .iter()
        .zip(phi)
        .map(|(a, p)| p * a.reward(cfg))
        .sum()
}

/// Closed-form dropping probability for Bernoulli arrivals, per class:
/// the probability that an arrival occurs while the queue is already full
/// at the slot start, P(n=1) · P(s = Q).
///
/// This ignores the admission taken in the same slot; see
/// [`dropping_probability_exact`] for the loss actually realized.
/// Returns `(guaranteed-service, best-effort)`.
pub fn dropping_probability_paper(
    phi: &[f64],
    space: &StateSpace,
    cfg: &ScenarioConfig,
) -> Result<(f64, f64)> {
    let p_g = cfg.bernoulli_arrival_prob("gs")?;
    let p_b = cfg.bernoulli_arrival_prob("be")?;
    let mut full_g = 0.0;
    let mut full_b = 0.0;
    for (i, state) in space.iter() {
        if state.s_g == cfg.gs_queue_capacity {
            full_g += phi[i];
        }
        if state.s_b == cfg.be_queue_capacity {
            full_b += phi[i];
        }
    }
    Ok((p_g * full_g, p_b * full_b))
}

/// Expected number of arrivals dropped per slot, per class:
/// Σᵢ φᵢ Σₙ P(n) · max(0, sᵢ − aᵢ + n − Q).
///
/// Exact under the slot order (admission frees queue space before arrivals
/// land), and valid for any finite arrival distribution.
/// Returns `(guaranteed-service, best-effort)`.
pub fn dropping_probability_exact(
    policy: &Policy,
    phi: &[f64],
    space: &StateSpace,
    cfg: &ScenarioConfig,
) -> (f64, f64) {
    let overflow = |s: u32, a: u32, n: usize, cap: u32| -> f64 {
        (s as i64 - a as i64 + n as i64 - cap as i64).max(0) as f64
    };
    let mut loss_g = 0.0;
    let mut loss_b = 0.0;
    for (i, state) in space.iter() {
        let action = policy.actions[i];
        for (n, &p_n) in cfg.gs_arrival_dist.iter().enumerate() {
            loss_g += phi[i] * p_n * overflow(state.s_g, action.a_g, n, cfg.gs_queue_capacity);
        }
        for (n, &p_n) in cfg.be_arrival_dist.iter().enumerate() {
            loss_b += phi[i] * p_n * overflow(state.s_b, action.a_b, n, cfg.be_queue_capacity);
        }
    }
    (loss_g, loss_b)
}

/// Steady-state performance of one policy on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub avg_reward: f64,
    pub gs_drop_paper: f64,
    pub be_drop_paper: f64,
    pub gs_drop_exact: f64,
    pub be_drop_exact: f64,
    pub mean_sg: f64,
    pub mean_sb: f64,
    pub mean_mg: f64,
    pub mean_mb: f64,
}

/// Full analytic evaluation of a policy: induced chain → stationary
/// distribution (from the empty system) → steady-state measures.
pub fn evaluate(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    policy: &Policy,
) -> Result<EvaluationReport> {
    let rows = build_transition_matrix(policy, space, cfg)?;
    let stationary = stationary_distribution(&rows, space.empty_state_index())?;
    let phi = &stationary.probabilities;
    let (gs_drop_paper, be_drop_paper) = dropping_probability_paper(phi, space, cfg)?;
    let (gs_drop_exact, be_drop_exact) = dropping_probability_exact(policy, phi, space, cfg);
    let mut mean = [0.0; 4];
    for (i, state) in space.iter() {
        mean[0] += phi[i] * state.s_g as f64;
        mean[1] += phi[i] * state.s_b as f64;
        mean[2] += phi[i] * state.m_g as f64;
        mean[3] += phi[i] * state.m_b as f64;
    }
    Ok(EvaluationReport {
        avg_reward: average_reward(policy, phi, cfg),
        gs_drop_paper,
        be_drop_paper,
        gs_drop_exact,
        be_drop_exact,
        mean_sg: mean[0],
        mean_sb: mean[1],
        mean_mg: mean[2],
        mean_mb: mean[3],
    })
}

/// Write evaluation reports as CSV, one row per (scenario, policy) pair:
/// `scenario_id,policy,avg_reward,gs_drop_paper,be_drop_paper,gs_drop_exact,be_drop_exact,mean_sg,mean_sb,mean_mg,mean_mb`.
pub fn write_report_csv<W: Write>(
    writer: W,
    rows: &[(&str, &str, &EvaluationReport)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "scenario_id",
        "policy",
        "avg_reward",
        "gs_drop_paper",
        "be_drop_paper",
        "gs_drop_exact",
        "be_drop_exact",
        "mean_sg",
        "mean_sb",
        "mean_mg",
        "mean_mb",
    ])?;
    for (scenario_id, policy, report) in rows {
        w.write_record([
            scenario_id.to_string(),
            policy.to_string(),
            fmt_sig(report.avg_reward),
            fmt_sig(report.gs_drop_paper),
            fmt_sig(report.be_drop_paper),
            fmt_sig(report.gs_drop_exact),
            fmt_sig(report.be_drop_exact),
            fmt_sig(report.mean_sg),
            fmt_sig(report.mean_sb),
            fmt_sig(report.mean_mg),
            fmt_sig(report.mean_mb),
        ])?;
    }
    w.flush()?;
    Ok(())
}
