//! One-parameter sweeps: evaluate optimal/greedy policies over a value grid
//! and emit a long-format CSV plus two-column figure data files.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use sliceorch::numfmt::fmt_sig;
use sliceorch::{evaluate, EvaluationReport, ScenarioConfig, StateSpace};

use crate::{load_config, solve_policy, CliError, PolicyChoice};

/// Which scenario knob a sweep varies. Arrival-probability sweeps replace the
/// class's distribution with Bernoulli(value).
#[derive(Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SweepParam {
    GsDepartureProb,
    BeDepartureProb,
    GsArrivalProb,
    BeArrivalProb,
    GsReward,
    BeReward,
    Discount,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::GsDepartureProb => "gs_departure_prob",
            SweepParam::BeDepartureProb => "be_departure_prob",
            SweepParam::GsArrivalProb => "gs_arrival_prob",
            SweepParam::BeArrivalProb => "be_arrival_prob",
            SweepParam::GsReward => "gs_reward",
            SweepParam::BeReward => "be_reward",
            SweepParam::Discount => "discount",
        }
    }

    /// Base scenario with this parameter set to `value`, revalidated.
    fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, CliError> {
        let mut cfg = base.clone();
        match self {
            SweepParam::GsDepartureProb => cfg.gs_departure_prob = value,
            SweepParam::BeDepartureProb => cfg.be_departure_prob = value,
            SweepParam::GsArrivalProb => cfg.gs_arrival_dist = vec![1.0 - value, value],
            SweepParam::BeArrivalProb => cfg.be_arrival_dist = vec![1.0 - value, value],
            SweepParam::GsReward => cfg.gs_reward = value,
            SweepParam::BeReward => cfg.be_reward = value,
            SweepParam::Discount => cfg.discount = value,
        }
        // arrival probabilities outside [0,1] produce a negative entry, so
        // the scenario's own validation covers every parameter's domain
        cfg.validate().map_err(|e| {
            CliError::Usage(format!("sweep value {value} for {}: {e}", self.name()))
        })?;
        Ok(cfg)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    param: SweepParam,
    values: Vec<f64>,
    policies: Vec<PolicyChoice>,
}

impl SweepSpec {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let spec: SweepSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("sweep spec {}: {e}", path.display())))?;
        if spec.values.is_empty() {
            return Err(CliError::Usage("sweep spec has no values".to_string()));
        }
        if spec.policies.is_empty() {
            return Err(CliError::Usage("sweep spec has no policies".to_string()));
        }
        Ok(spec)
    }
}

type Measure = fn(&EvaluationReport) -> f64;

/// The measures emitted per sweep point, in long-CSV column order.
const MEASURES: [(&str, Measure); 5] = [
    ("avg_reward", |r| r.avg_reward),
    ("be_drop_paper", |r| r.be_drop_paper),
    ("gs_drop_paper", |r| r.gs_drop_paper),
    ("be_drop_exact", |r| r.be_drop_exact),
    ("gs_drop_exact", |r| r.gs_drop_exact),
];

pub fn cmd_sweep(config: &Path, spec_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let (base, _) = load_config(config)?;
    let spec = SweepSpec::load(spec_path)?;
    fs::create_dir_all(out_dir)?;

    // evaluate every (value, policy) point in spec order
    let mut points: Vec<(f64, PolicyChoice, EvaluationReport)> =
        Vec::with_capacity(spec.values.len() * spec.policies.len());
    for &value in &spec.values {
        let cfg = spec.param.apply(&base, value)?;
        let space = StateSpace::enumerate(&cfg)?;
        for &choice in &spec.policies {
            let policy = solve_policy(&cfg, &space, choice)?;
            points.push((value, choice, evaluate(&cfg, &space, &policy)?));
        }
    }

    let csv_path = out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_writer(fs::File::create(&csv_path)?);
    w.write_record([
        "param",
        "value",
        "policy",
        "avg_reward",
        "be_drop_paper",
        "gs_drop_paper",
        "be_drop_exact",
        "gs_drop_exact",
    ])
    .map_err(sliceorch::Error::from)?;
    for (value, choice, report) in &points {
        let mut record = vec![
            spec.param.name().to_string(),
            fmt_sig(*value),
            choice.to_string(),
        ];
        record.extend(MEASURES.iter().map(|(_, get)| fmt_sig(get(report))));
        w.write_record(&record).map_err(sliceorch::Error::from)?;
    }
    w.flush().map_err(sliceorch::Error::from)?;

    // one two-column file per (measure, policy) curve for external plotting
    for &choice in &spec.policies {
        for (measure, get) in MEASURES {
            let path = out_dir.join(format!("fig-{measure}-{choice}.dat"));
            let mut f = fs::File::create(path)?;
            for (value, point_choice, report) in &points {
                if *point_choice == choice {
                    writeln!(f, "{} {}", fmt_sig(*value), fmt_sig(get(report)))?;
                }
            }
        }
    }
    println!(
        "swept {} over {} values × {} policies into {}",
        spec.param.name(),
        spec.values.len(),
        spec.policies.len(),
        out_dir.display()
    );
    Ok(())
}
