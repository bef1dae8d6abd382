//! Scenario parameters: capacities, per-slice demands, queue bounds, arrival
//! and departure probabilities, rewards, and the discount factor.
//!
//! A scenario describes two request classes sharing three resource pools:
//! - GS (guaranteed-service) requests: reward `gs_reward` per admission,
//!   per-slot departure probability `gs_departure_prob` once active.
//! - BE (best-effort) requests: likewise with the `be_` parameters.
//!
//! Arrival counts per slot follow arbitrary finite distributions
//! (`gs_arrival_dist[n]` = probability of exactly `n` arrivals); the common
//! Bernoulli case is the two-entry vector `[1-p, p]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All parameters of one scenario. Serializes to/from JSON with exactly
/// these field names; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Radio resource units available in total (R).
    pub radio_capacity: u32,
    /// Computing resource units available in total (C).
    pub compute_capacity: u32,
    /// Storage resource units available in total (Δ).
    pub storage_capacity: u32,
    /// Resource units one GS slice occupies: [radio, compute, storage].
    pub gs_demand: [u32; 3],
    /// Resource units one BE slice occupies: [radio, compute, storage].
    pub be_demand: [u32; 3],
    /// GS queue capacity Q_g.
    pub gs_queue_capacity: u32,
    /// BE queue capacity Q_b.
    pub be_queue_capacity: u32,
    /// P(n GS arrivals in a slot) = gs_arrival_dist[n]; must sum to 1.
    pub gs_arrival_dist: Vec<f64>,
    /// P(n BE arrivals in a slot) = be_arrival_dist[n]; must sum to 1.
    pub be_arrival_dist: Vec<f64>,
    /// Per-slot completion probability of an active GS slice, in (0,1].
    pub gs_departure_prob: f64,
    /// Per-slot completion probability of an active BE slice, in (0,1].
    pub be_departure_prob: f64,
    /// Reward collected when one GS request is admitted.
    pub gs_reward: f64,
    /// Reward collected when one BE request is admitted.
    pub be_reward: f64,
    /// Discount factor γ ∈ (0,1) for the infinite-horizon objective.
    pub discount: f64,
    /// Whether slices admitted this slot may also complete this slot.
    /// Default false: a new slice runs at least one full slot.
    #[serde(default)]
    pub departures_include_new: bool,
}

/// Probability-vector sanity: entries nonnegative, total 1 within this bound.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

impl ScenarioConfig {
    /// Validates every field; returns the first violation found, naming the
    /// offending field.
    pub fn validate(&self) -> Result<()> {
        check_arrival_dist("gs_arrival_dist", &self.gs_arrival_dist)?;
        check_arrival_dist("be_arrival_dist", &self.be_arrival_dist)?;
        check_departure_prob("gs_departure_prob", self.gs_departure_prob)?;
        check_departure_prob("be_departure_prob", self.be_departure_prob)?;
        check_demand("gs_demand", self.gs_demand)?;
        check_demand("be_demand", self.be_demand)?;
        check_reward("gs_reward", self.gs_reward)?;
        check_reward("be_reward", self.be_reward)?;
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::InvalidConfig {
                field: "discount",
                reason: format!("must lie in (0,1), got {}", self.discount),
            });
        }
        Ok(())
    }

    /// Parses and validates a config from its JSON text.
    ///
    /// Arrival distributions that pass validation but carry rounding residue
    /// (sum within tolerance of 1, yet not exactly 1) are rescaled so later
    /// stochastic-row audits start from an exactly normalized input.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        for dist in [&mut cfg.gs_arrival_dist, &mut cfg.be_arrival_dist] {
            let total: f64 = dist.iter().sum();
            if total != 1.0 {
                for p in dist.iter_mut() {
                    *p /= total;
                }
            }
        }
        Ok(cfg)
    }

    /// Serializes to pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Total capacity vector [R, C, Δ].
    pub fn capacities(&self) -> [u32; 3] {
        [
            self.radio_capacity,
            self.compute_capacity,
            self.storage_capacity,
        ]
    }

    /// Largest arrival count with nonzero probability for each class.
    pub fn max_arrivals(&self) -> (u32, u32) {
        (
            top_support(&self.gs_arrival_dist),
            top_support(&self.be_arrival_dist),
        )
    }

    /// The arrival probability p of a Bernoulli distribution — length 2, or
    /// the degenerate length-1 case (no arrivals ever, p = 0). Longer
    /// supports yield an error naming `side`.
    pub fn bernoulli_arrival_prob(&self, side: &'static str) -> Result<f64> {
        let dist = match side {
            "gs" => &self.gs_arrival_dist,
            _ => &self.be_arrival_dist,
        };
        match dist.len() {
            1 => Ok(0.0),
            2 => Ok(dist[1]),
            len => Err(Error::UnsupportedArrivalModel { side, len }),
        }
    }
}

fn top_support(dist: &[f64]) -> u32 {
    dist.iter()
        .rposition(|&p| p > 0.0)
        .map(|i| i as u32)
        .unwrap_or(0)
}

fn check_arrival_dist(field: &'static str, dist: &[f64]) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::InvalidConfig {
            field,
            reason: "must be non-empty".into(),
        });
    }
    if let Some(p) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidConfig {
            field,
            reason: format!("entries must be finite and nonnegative, got {p}"),
        });
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::InvalidConfig {
            field,
            reason: format!("must sum to 1 within {PROBABILITY_TOLERANCE:e}, got {total:.17}"),
        });
    }
    Ok(())
}

fn check_departure_prob(field: &'static str, p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidConfig {
            field,
            reason: format!("must lie in (0,1], got {p}"),
        });
    }
    Ok(())
}

fn check_demand(field: &'static str, demand: [u32; 3]) -> Result<()> {
    if demand == [0, 0, 0] {
        return Err(Error::InvalidConfig {
            field,
            reason: "a slice must occupy at least one resource unit".into(),
        });
    }
    Ok(())
}

fn check_reward(field: &'static str, r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::InvalidConfig {
            field,
            reason: format!("must be finite and nonnegative, got {r}"),
        });
    }
    Ok(())
}
