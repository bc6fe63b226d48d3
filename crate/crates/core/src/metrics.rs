//! Per-step metric streams and the reports built from them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{RoutingDecision, SlaParams};
use crate::JOULES_PER_MJ;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Column order of the per-step CSV.
pub const STEP_COLUMNS: [&str; 8] = [
    "t", "explored", "chosen", "cost_j", "sat", "queue", "run_sat", "run_cost_j",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub explored: bool,
    pub chosen: usize,
    pub cost_j: f64,
    pub sat: Option<bool>,
    /// Queue after this request.
    pub queue: f64,
    /// NaN until a satisfaction bit is known; `null` in JSON.
    #[serde(with = "null_as::nan")]
    pub run_sat: f64,
    pub run_cost_j: f64,
}

/// Append-only step log with running aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStream {
    pub models: usize,
    pub steps: Vec<StepRecord>,
    total_cost_j: f64,
    satisfied: u64,
    labelled: u64,
    explorations: u64,
    exploration_cost_j: f64,
    /// Non-exploration selections per model.
    calls: Vec<u64>,
    queue_sum: f64,
    #[serde(with = "null_as::neg_infinity")]
    max_queue_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub schema_version: u32,
    pub requests: u64,
    pub total_cost_j: f64,
    pub mean_cost_j: Option<f64>,
    pub mean_cost_mj: Option<f64>,
    pub mean_satisfaction: Option<f64>,
    /// Share of non-exploration requests sent to each model.
    pub call_ratios: Vec<f64>,
    pub exploration_count: u64,
    pub exploration_cost_j: f64,
    /// Exploration cost as a fraction of total cost.
    pub exploration_energy_share: f64,
    pub final_queue: f64,
    /// `Q_T / T`, an upper bound on `α − mean satisfaction`.
    pub queue_over_t: Option<f64>,
    /// `max_t (Q_t − √t)`.
    pub max_queue_excess: Option<f64>,
    pub mean_queue: Option<f64>,
}

impl MetricStream {
    pub fn new(models: usize) -> Self {
        Self {
            models,
            steps: Vec::new(),
            total_cost_j: 0.0,
            satisfied: 0,
            labelled: 0,
            explorations: 0,
            exploration_cost_j: 0.0,
            calls: vec![0; models],
            queue_sum: 0.0,
            max_queue_excess: f64::NEG_INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn update(&mut self, decision: &RoutingDecision) -> Result<()> {
        let expected = self.steps.last().map_or(1, |s| s.t + 1);
        if decision.t != expected {
            return Err(Error::OutOfSequence {
                expected,
                got: decision.t,
            });
        }
        if decision.chosen.0 >= self.models {
            return Err(Error::Dimension {
                expected: self.models,
                got: decision.chosen.0 + 1,
            });
        }
        self.total_cost_j += decision.cost_incurred;
        if let Some(s) = decision.realized_satisfaction {
            self.labelled += 1;
            self.satisfied += u64::from(s);
        }
        if decision.explored {
            self.explorations += 1;
            self.exploration_cost_j += decision.cost_incurred;
        } else {
            self.calls[decision.chosen.0] += 1;
        }
        self.queue_sum += decision.queue_after;
        let n = self.steps.len() as f64 + 1.0;
        self.max_queue_excess = self
            .max_queue_excess
            .max(decision.queue_after - (decision.t as f64 + 1.0).sqrt());
        self.steps.push(StepRecord {
            t: decision.t,
            explored: decision.explored,
            chosen: decision.chosen.0,
            cost_j: decision.cost_incurred,
            sat: decision.realized_satisfaction,
            queue: decision.queue_after,
            run_sat: self.running_satisfaction().unwrap_or(f64::NAN),
            run_cost_j: self.total_cost_j / n,
        });
        Ok(())
    }

    /// Counts a satisfaction bit that arrived after its decision was
    /// recorded.
    pub fn record_feedback(&mut self, satisfied: bool) {
        self.labelled += 1;
        self.satisfied += u64::from(satisfied);
    }

    pub fn running_satisfaction(&self) -> Option<f64> {
        (self.labelled > 0).then(|| self.satisfied as f64 / self.labelled as f64)
    }

    pub fn total_cost_j(&self) -> f64 {
        self.total_cost_j
    }

    pub fn exploration_count(&self) -> u64 {
        self.explorations
    }

    pub fn final_queue(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.queue)
    }

    pub fn summary(&self) -> MetricSummary {
        let n = self.steps.len() as u64;
        let nonexplore: u64 = self.calls.iter().sum();
        let call_ratios = self
            .calls
            .iter()
            .map(|&c| if nonexplore > 0 { c as f64 / nonexplore as f64 } else { 0.0 })
            .collect();
        let mean_cost = (n > 0).then(|| self.total_cost_j / n as f64);
        MetricSummary {
            schema_version: REPORT_SCHEMA_VERSION,
            requests: n,
            total_cost_j: self.total_cost_j,
            mean_cost_j: mean_cost,
            mean_cost_mj: mean_cost.map(|c| c / JOULES_PER_MJ),
            mean_satisfaction: self.running_satisfaction(),
            call_ratios,
            exploration_count: self.explorations,
            exploration_cost_j: self.exploration_cost_j,
            exploration_energy_share: if self.total_cost_j > 0.0 {
                self.exploration_cost_j / self.total_cost_j
            } else {
                0.0
            },
            final_queue: self.final_queue(),
            queue_over_t: (n > 0).then(|| self.final_queue() / n as f64),
            max_queue_excess: (n > 0).then_some(self.max_queue_excess),
            mean_queue: (n > 0).then(|| self.queue_sum / n as f64),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(STEP_COLUMNS).map_err(csv_err)?;
        for s in &self.steps {
            w.write_record([
                s.t.to_string(),
                u8::from(s.explored).to_string(),
                s.chosen.to_string(),
                s.cost_j.to_string(),
                s.sat.map_or(String::new(), |b| u8::from(b).to_string()),
                s.queue.to_string(),
                s.run_sat.to_string(),
                s.run_cost_j.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// First `t` at which the running satisfaction reaches `alpha` and never
/// again drops below `alpha − tolerance`.
pub fn time_to_sla(steps: &[StepRecord], alpha: f64, tolerance: f64) -> Option<u64> {
    let mut suffix_ok = true;
    let mut answer = None;
    for s in steps.iter().rev() {
        suffix_ok &= s.run_sat >= alpha - tolerance;
        if !suffix_ok {
            break;
        }
        if s.run_sat >= alpha {
            answer = Some(s.t);
        }
    }
    answer
}

/// Tolerance used for time-to-SLA in sweeps.
pub const TIME_TO_SLA_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub grace_t0: u64,
    pub compliant: bool,
    /// Largest `α − running satisfaction` over `t ≥ T0`, floored at zero.
    pub max_violation: f64,
    pub final_satisfaction: Option<f64>,
    pub queue_over_t: Option<f64>,
    pub time_to_sla: Option<u64>,
}

pub fn compliance_report(
    stream: &MetricStream,
    sla: &SlaParams,
    grace_t0: u64,
) -> Result<ComplianceReport> {
    if (stream.len() as u64) < grace_t0 {
        return Err(Error::param(format!(
            "stream has {} steps, fewer than the grace period {grace_t0}",
            stream.len()
        )));
    }
    let mut max_violation: f64 = 0.0;
    for s in stream.steps.iter().filter(|s| s.t >= grace_t0) {
        // Unlabelled prefixes have NaN running satisfaction and count as full violation.
        let v = if s.run_sat.is_nan() {
            sla.alpha
        } else {
            sla.alpha - s.run_sat
        };
        max_violation = max_violation.max(v);
    }
    let summary = stream.summary();
    Ok(ComplianceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        alpha: sla.alpha,
        grace_t0,
        compliant: max_violation <= 0.0,
        max_violation,
        final_satisfaction: summary.mean_satisfaction,
        queue_over_t: summary.queue_over_t,
        time_to_sla: time_to_sla(&stream.steps, sla.alpha, TIME_TO_SLA_TOLERANCE),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub schema_version: u32,
    pub predictor_cost_j: f64,
    pub mean_call_cost_j: f64,
    /// Predictor cost over mean call cost, in percent.
    pub ratio_of_averages_pct: f64,
    /// Mean over requests of predictor cost over that request's call cost,
    /// in percent.
    pub average_of_ratios_pct: f64,
}

pub fn overhead_report(stream: &MetricStream, predictor_cost_per_call: f64) -> Result<OverheadReport> {
    if stream.is_empty() {
        return Err(Error::param("overhead report needs at least one step"));
    }
    let n = stream.len() as f64;
    let mean_call = stream.total_cost_j() / n;
    let avg_ratio = stream
        .steps
        .iter()
        .map(|s| predictor_cost_per_call / s.cost_j)
        .sum::<f64>()
        / n;
    Ok(OverheadReport {
        schema_version: REPORT_SCHEMA_VERSION,
        predictor_cost_j: predictor_cost_per_call,
        mean_call_cost_j: mean_call,
        ratio_of_averages_pct: 100.0 * predictor_cost_per_call / mean_call,
        average_of_ratios_pct: 100.0 * avg_ratio,
    })
}

/// Overhead across several scenarios, each given as
/// `(predictor cost, mean call cost)` in joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadSummary {
    pub schema_version: u32,
    pub scenarios: usize,
    pub mean_predictor_cost_j: f64,
    pub mean_call_cost_j: f64,
    pub ratio_of_averages_pct: f64,
    pub average_of_ratios_pct: f64,
    pub per_scenario_pct: Vec<f64>,
}

pub fn overhead_summary(scenarios: &[(f64, f64)]) -> Result<OverheadSummary> {
    if scenarios.is_empty() {
        return Err(Error::param("no scenarios"));
    }
    if scenarios.iter().any(|&(_, call)| !(call > 0.0)) {
        return Err(Error::param("mean call cost must be positive"));
    }
    let n = scenarios.len() as f64;
    let mean_pred = scenarios.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_call = scenarios.iter().map(|s| s.1).sum::<f64>() / n;
    let per: Vec<f64> = scenarios.iter().map(|&(p, c)| 100.0 * p / c).collect();
    Ok(OverheadSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        scenarios: scenarios.len(),
        mean_predictor_cost_j: mean_pred,
        mean_call_cost_j: mean_call,
        ratio_of_averages_pct: 100.0 * mean_pred / mean_call,
        average_of_ratios_pct: per.iter().sum::<f64>() / n,
        per_scenario_pct: per,
    })
}

/// JSON has no NaN or infinities; these fields store them as `null`.
mod null_as {
    use serde::{Deserialize, Deserializer, Serializer};

    fn ser<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(&v)
        } else {
            s.serialize_none()
        }
    }

    pub mod nan {
        use super::*;

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            ser(*v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
        }
    }

    pub mod neg_infinity {
        use super::*;

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            ser(*v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
        }
    }
}
