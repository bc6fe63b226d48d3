use serde::{Deserialize, Serialize};

use crate::baselines::{calibrate_guessing, route_oracle, route_single, GuessingPolicy};
use crate::error::{Error, Result};
use crate::metrics::MetricStream;
use crate::predictor::{FeatureExtractor, LearningRateSchedule};
use crate::queue::VirtualQueue;
use crate::rng::{streams, SeededRng};
use crate::router::{EventLabels, RouterConfig, RouterState, SelectionRule};
use crate::types::{ModelId, RoutingDecision, SlaParams, ZooConfig};

use super::trace::ExperimentTrace;

/// A routing policy to replay over a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    MessPlus {
        #[serde(default)]
        mu: f64,
        #[serde(default)]
        schedule: LearningRateSchedule,
    },
    Single {
        model: ModelId,
    },
    /// Educated guessing, calibrated on the trace's per-model label rates.
    Guessing,
    /// Two-model threshold router with the same exploration and predictor as
    /// MESS+.
    Threshold {
        small: ModelId,
        large: ModelId,
        threshold: f64,
    },
    Oracle,
}

impl PolicySpec {
    pub fn messplus() -> Self {
        PolicySpec::MessPlus {
            mu: 0.0,
            schedule: LearningRateSchedule::default(),
        }
    }

    pub fn name(&self, zoo: &ZooConfig) -> String {
        match self {
            PolicySpec::MessPlus { .. } => "messplus".into(),
            PolicySpec::Single { model } => zoo
                .models
                .get(model.0)
                .map_or_else(|| format!("single-{}", model.0), |m| format!("{}-only", m.name)),
            PolicySpec::Guessing => "educated-guessing".into(),
            PolicySpec::Threshold { threshold, .. } => format!("threshold-{threshold}"),
            PolicySpec::Oracle => "oracle".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub policy: String,
    pub stream: MetricStream,
    pub guessing: Option<GuessingPolicy>,
}

/// Replays a trace through a router built from `config`, calling `observe`
/// after every decision.
pub fn run_router<F>(trace: &ExperimentTrace, config: RouterConfig, mut observe: F) -> Result<MetricStream>
where
    F: FnMut(&RoutingDecision, &RouterState),
{
    trace.check_zoo(&config.zoo)?;
    if config.extractor.dim() != trace.header.dim {
        return Err(Error::TraceMismatch(format!(
            "extractor dimension {} differs from trace dimension {}",
            config.extractor.dim(),
            trace.header.dim
        )));
    }
    let mut router = RouterState::new(config)?;
    let mut stream = MetricStream::new(trace.header.models);
    for record in &trace.records {
        let decision = router.step(&record.to_event(), &mut EventLabels)?;
        stream.update(&decision)?;
        observe(&decision, &router);
    }
    Ok(stream)
}

pub fn run_experiment(
    trace: &ExperimentTrace,
    zoo: &ZooConfig,
    policy: &PolicySpec,
    sla: &SlaParams,
    seed: u64,
) -> Result<ExperimentRun> {
    trace.check_zoo(zoo)?;
    sla.validate()?;
    let name = policy.name(zoo);
    let router_config = |mu: f64, schedule: LearningRateSchedule, selection: SelectionRule| {
        let mut cfg = RouterConfig::new(
            *sla,
            zoo.clone(),
            FeatureExtractor::Passthrough {
                dim: trace.header.dim,
            },
            seed,
        );
        cfg.mu = mu;
        cfg.schedule = schedule;
        cfg.selection = selection;
        cfg
    };
    match policy {
        PolicySpec::MessPlus { mu, schedule } => {
            let cfg = router_config(*mu, *schedule, SelectionRule::DriftPlusPenalty);
            Ok(ExperimentRun {
                policy: name,
                stream: run_router(trace, cfg, |_, _| {})?,
                guessing: None,
            })
        }
        PolicySpec::Threshold {
            small,
            large,
            threshold,
        } => {
            let rule = SelectionRule::Threshold {
                small: *small,
                large: *large,
                threshold: *threshold,
            };
            let cfg = router_config(0.0, LearningRateSchedule::default(), rule);
            Ok(ExperimentRun {
                policy: name,
                stream: run_router(trace, cfg, |_, _| {})?,
                guessing: None,
            })
        }
        PolicySpec::Single { model } => {
            if model.0 >= zoo.len() {
                return Err(Error::param(format!("model {} outside zoo", model.0)));
            }
            let stream = replay_fixed(trace, sla, |_| route_single(*model))?;
            Ok(ExperimentRun {
                policy: name,
                stream,
                guessing: None,
            })
        }
        PolicySpec::Guessing => {
            let guess = calibrate_guessing(&trace.label_rates(), sla.alpha)?;
            let mut rng = SeededRng::new(seed, streams::POLICY);
            let stream = replay_fixed(trace, sla, |_| guess.sample(&mut rng))?;
            Ok(ExperimentRun {
                policy: name,
                stream,
                guessing: Some(guess),
            })
        }
        PolicySpec::Oracle => {
            let stream = replay_fixed(trace, sla, |rec| {
                route_oracle(&rec.label_bits(), &rec.costs).expect("validated trace")
            })?;
            Ok(ExperimentRun {
                policy: name,
                stream,
                guessing: None,
            })
        }
    }
}

/// Replays a policy that picks one model per request without exploring.
/// A shadow virtual queue is kept for reporting.
fn replay_fixed<F>(trace: &ExperimentTrace, sla: &SlaParams, mut pick: F) -> Result<MetricStream>
where
    F: FnMut(&super::trace::TraceRecord) -> ModelId,
{
    let m = trace.header.models;
    let mut stream = MetricStream::new(m);
    let mut queue = VirtualQueue::new();
    for rec in &trace.records {
        let chosen = pick(rec);
        let satisfied = rec.labels[chosen.0] == 1;
        let before = queue.q;
        queue.push(sla.alpha, satisfied)?;
        let mut y = vec![false; m];
        y[chosen.0] = true;
        stream.update(&RoutingDecision {
            t: rec.t,
            explored: false,
            chosen,
            y,
            s_hat: Vec::new(),
            best_by_label: None,
            realized_satisfaction: Some(satisfied),
            cost_incurred: rec.costs[chosen.0],
            queue_before: before,
            queue_after: queue.q,
        })?;
    }
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_trace, ScenarioConfig};

    #[test]
    fn always_largest_costs_its_base_cost() {
        let cfg = ScenarioConfig::canonical(2000, 42).unwrap();
        let trace = generate_trace(&cfg).unwrap();
        let run = run_experiment(
            &trace,
            &cfg.zoo,
            &PolicySpec::Single { model: ModelId(2) },
            &cfg.sla,
            42,
        )
        .unwrap();
        let s = run.stream.summary();
        assert!((s.mean_cost_mj.unwrap() - 2.91).abs() < 1e-9);
        assert_eq!(s.call_ratios, vec![0.0, 0.0, 1.0]);
        assert_eq!(run.policy, "L70B-only");
    }

    #[test]
    fn oracle_has_top_satisfaction() {
        let cfg = ScenarioConfig::canonical(3000, 43).unwrap();
        let trace = generate_trace(&cfg).unwrap();
        let oracle = run_experiment(&trace, &cfg.zoo, &PolicySpec::Oracle, &cfg.sla, 1).unwrap();
        let oracle_cost = oracle.stream.summary().mean_cost_j.unwrap();
        let oracle_sat = oracle.stream.summary().mean_satisfaction.unwrap();
        for policy in [
            PolicySpec::messplus(),
            PolicySpec::Guessing,
            PolicySpec::Single { model: ModelId(0) },
            PolicySpec::Single { model: ModelId(1) },
            PolicySpec::Single { model: ModelId(2) },
            PolicySpec::Threshold {
                small: ModelId(0),
                large: ModelId(2),
                threshold: 0.5,
            },
        ] {
            let run = run_experiment(&trace, &cfg.zoo, &policy, &cfg.sla, 1).unwrap();
            let s = run.stream.summary();
            if matches!(policy, PolicySpec::Single { model: ModelId(2) }) {
                assert!(oracle_cost < s.mean_cost_j.unwrap());
            }
            assert!(oracle_sat >= s.mean_satisfaction.unwrap(), "{}", run.policy);
        }
    }

    #[test]
    fn zoo_mismatch_is_rejected() {
        let cfg = ScenarioConfig::canonical(10, 1).unwrap();
        let trace = generate_trace(&cfg).unwrap();
        let mut zoo = cfg.zoo.clone();
        zoo.models[0].base_cost *= 2.0;
        assert!(matches!(
            run_experiment(&trace, &zoo, &PolicySpec::Oracle, &cfg.sla, 1),
            Err(Error::TraceMismatch(_))
        ));
    }
}
