//! The routing control loop.
//!
//! Per request `t`:
//!
//! 1. draw `X_t ~ Bernoulli(min(1, c/t^¼))`; the first request always
//!    explores;
//! 2. exploring: query every model, take one SGD step on the full label
//!    vector, charge the sum of all model costs and return the largest
//!    model's output;
//! 3. otherwise: predict `ŝ`, pick `argmin_m V·E_m + Q·(α − ŝ_m)` and charge
//!    only that model;
//! 4. update the virtual queue with the returned model's satisfaction bit.
//!
//! In deferred-feedback mode the bit arrives later through
//! [`RouterState::apply_feedback`], strictly in decision order.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cost::event_costs;
use crate::error::{Error, Result};
use crate::predictor::{FeatureExtractor, LearningRateSchedule, PredictorState};
use crate::queue::VirtualQueue;
use crate::rng::{streams, RngState, SeededRng};
use crate::types::{ModelId, RequestEvent, RoutingDecision, SlaParams, ZooConfig};

/// Joule costs are multiplied by this before entering the per-request
/// objective. Zoo costs are kept at aggregate scale (megajoules per model
/// average); the objective works in per-call joules, where a 1.08 MJ average
/// corresponds to a 414.69 J call.
pub const DEFAULT_OBJECTIVE_COST_SCALE: f64 = 414.69 / 1.08e6;

/// `p_t = min(1, c / t^¼)`.
pub fn exploration_probability(c: f64, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::param("request index is 1-based"));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::param(format!("exploration scale must be nonnegative, got {c}")));
    }
    Ok((c / (t as f64).powf(0.25)).min(1.0))
}

/// Drift-plus-penalty score of one model.
pub fn per_request_score(v: f64, queue_q: f64, alpha: f64, cost: f64, s_hat: f64) -> f64 {
    v * cost + queue_q * (alpha - s_hat)
}

/// `argmin_m V·costs_m + Q·(α − ŝ_m)`; ties go to the cheaper model, then the
/// lower index.
pub fn solve_per_request(
    v: f64,
    queue_q: f64,
    alpha: f64,
    costs: &[f64],
    s_hat: &[f64],
) -> Result<ModelId> {
    if costs.is_empty() {
        return Err(Error::EmptyZoo);
    }
    if costs.len() != s_hat.len() {
        return Err(Error::Dimension {
            expected: costs.len(),
            got: s_hat.len(),
        });
    }
    let mut best = 0;
    let mut best_score = per_request_score(v, queue_q, alpha, costs[0], s_hat[0]);
    for m in 1..costs.len() {
        let score = per_request_score(v, queue_q, alpha, costs[m], s_hat[m]);
        if score < best_score || (score == best_score && costs[m] < costs[best]) {
            best = m;
            best_score = score;
        }
    }
    Ok(ModelId(best))
}

/// Answers "did model `m` satisfy request `t`?".
pub trait LabelSource {
    fn label(&mut self, event: &RequestEvent, model: ModelId) -> Option<bool>;

    /// Whether the source can label every model of a request, which is what
    /// exploration needs.
    fn full_labels(&self) -> bool;

    /// Labels arrive later as feedback instead of at routing time.
    fn deferred(&self) -> bool {
        false
    }
}

/// Labels carried on the event itself (traces and simulator output).
#[derive(Debug, Default, Clone, Copy)]
pub struct EventLabels;

impl LabelSource for EventLabels {
    fn label(&mut self, event: &RequestEvent, model: ModelId) -> Option<bool> {
        event.labels.as_ref().and_then(|l| l.get(model.0).copied())
    }

    fn full_labels(&self) -> bool {
        true
    }
}

/// Live traffic: nothing is known at routing time.
#[derive(Debug, Clone, Copy)]
pub struct DeferredLabels {
    /// Clients will report labels for every model on exploration steps.
    pub shadow_exploration: bool,
}

impl LabelSource for DeferredLabels {
    fn label(&mut self, _event: &RequestEvent, _model: ModelId) -> Option<bool> {
        None
    }

    fn full_labels(&self) -> bool {
        self.shadow_exploration
    }

    fn deferred(&self) -> bool {
        true
    }
}

/// How a model is picked on non-exploration requests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionRule {
    /// Minimize `V·E_m + Q·(α − ŝ_m)`.
    #[default]
    DriftPlusPenalty,
    /// Baseline: the small model if its `ŝ` clears `threshold`, else the
    /// large one. Ignores the queue.
    Threshold {
        small: ModelId,
        large: ModelId,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterConfig {
    pub sla: SlaParams,
    pub zoo: ZooConfig,
    pub extractor: FeatureExtractor,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub schedule: LearningRateSchedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cost_scale")]
    pub objective_cost_scale: f64,
    #[serde(default)]
    pub selection: SelectionRule,
}

fn default_cost_scale() -> f64 {
    DEFAULT_OBJECTIVE_COST_SCALE
}

impl RouterConfig {
    pub fn new(sla: SlaParams, zoo: ZooConfig, extractor: FeatureExtractor, seed: u64) -> Self {
        Self {
            sla,
            zoo,
            extractor,
            mu: 0.0,
            schedule: LearningRateSchedule::default(),
            seed,
            objective_cost_scale: DEFAULT_OBJECTIVE_COST_SCALE,
            selection: SelectionRule::DriftPlusPenalty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sla.validate()?;
        self.zoo.validate()?;
        self.extractor.validate()?;
        self.schedule.validate()?;
        if !(self.objective_cost_scale > 0.0 && self.objective_cost_scale.is_finite()) {
            return Err(Error::param("objective cost scale must be positive"));
        }
        if let SelectionRule::Threshold {
            small,
            large,
            threshold,
        } = self.selection
        {
            let m = self.zoo.len();
            if small.0 >= m || large.0 >= m || !(0.0..=1.0).contains(&threshold) {
                return Err(Error::param("threshold rule needs valid models and a threshold in [0,1]"));
            }
        }
        Ok(())
    }
}

/// A routed request still waiting for its satisfaction feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDecision {
    pub t: u64,
    pub chosen: ModelId,
    /// Features kept for the SGD step of a deferred exploration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploration_features: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RouterState {
    pub config: RouterConfig,
    pub queue: VirtualQueue,
    pub predictor: PredictorState,
    rng: SeededRng,
    /// Index the next request must carry.
    pub t: u64,
    pending: VecDeque<PendingDecision>,
}

/// Serializable image of a [`RouterState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterSnapshot {
    pub config: RouterConfig,
    pub queue: VirtualQueue,
    pub predictor: PredictorState,
    pub rng: RngState,
    pub t: u64,
    pub pending: Vec<PendingDecision>,
}

impl RouterState {
    pub fn new(config: RouterConfig) -> Result<Self> {
        config.validate()?;
        let predictor = PredictorState::new(
            config.extractor.dim(),
            config.zoo.len(),
            config.mu,
            config.schedule,
        )?;
        let rng = SeededRng::new(config.seed, streams::ROUTER);
        Ok(Self {
            config,
            queue: VirtualQueue::new(),
            predictor,
            rng,
            t: 1,
            pending: VecDeque::new(),
        })
    }

    pub fn sla(&self) -> &SlaParams {
        &self.config.sla
    }

    pub fn zoo(&self) -> &ZooConfig {
        &self.config.zoo
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingDecision> {
        self.pending.iter()
    }

    pub fn snapshot(&self) -> RouterSnapshot {
        RouterSnapshot {
            config: self.config.clone(),
            queue: self.queue,
            predictor: self.predictor.clone(),
            rng: self.rng.state(),
            t: self.t,
            pending: self.pending.iter().cloned().collect(),
        }
    }

    pub fn from_snapshot(snap: RouterSnapshot) -> Result<Self> {
        snap.config.validate()?;
        Ok(Self {
            config: snap.config,
            queue: snap.queue,
            predictor: snap.predictor,
            rng: SeededRng::restore(snap.rng),
            t: snap.t,
            pending: snap.pending.into(),
        })
    }

    /// Featurizes the event's payload with the configured extractor.
    pub fn featurize(&self, event: &RequestEvent) -> Result<Vec<f64>> {
        self.config.extractor.featurize(&event.input)
    }

    fn costs_for(&self, event: &RequestEvent) -> Result<Vec<f64>> {
        let costs = event_costs(&self.config.zoo, event);
        if costs.len() != self.config.zoo.len() {
            return Err(Error::Dimension {
                expected: self.config.zoo.len(),
                got: costs.len(),
            });
        }
        if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::param("request costs must be finite and positive"));
        }
        Ok(costs)
    }

    /// Routes one request.
    pub fn step(
        &mut self,
        event: &RequestEvent,
        labels: &mut dyn LabelSource,
    ) -> Result<RoutingDecision> {
        if event.t != self.t {
            return Err(Error::OutOfSequence {
                expected: self.t,
                got: event.t,
            });
        }
        let costs = self.costs_for(event)?;
        let x = self.featurize(event)?;
        let sla = self.config.sla;
        let m = self.config.zoo.len();

        let rng_before = self.rng.clone();
        let p = exploration_probability(sla.c, self.t)?;
        let draw = self.rng.bernoulli(p);
        let explore = (draw || self.t == 1) && labels.full_labels();

        let s_hat = self.predictor.predict(&x)?;
        let queue_before = self.queue.q;

        let decision = if explore {
            let largest = self.config.zoo.largest;
            let full: Option<Vec<bool>> = self
                .config
                .zoo
                .ids()
                .map(|id| labels.label(event, id))
                .collect();
            let cost_incurred = costs.iter().sum();
            match full {
                Some(full) => {
                    if let Err(e) = self.predictor.sgd_step(&x, &full) {
                        self.rng = rng_before;
                        return Err(e);
                    }
                    let satisfied = full[largest.0];
                    self.queue.push(sla.alpha, satisfied)?;
                    RoutingDecision {
                        t: self.t,
                        explored: true,
                        chosen: largest,
                        y: vec![true; m],
                        s_hat,
                        best_by_label: Some(best_by_label(&full, largest)),
                        realized_satisfaction: Some(satisfied),
                        cost_incurred,
                        queue_before,
                        queue_after: self.queue.q,
                    }
                }
                None if labels.deferred() => {
                    self.pending.push_back(PendingDecision {
                        t: self.t,
                        chosen: largest,
                        exploration_features: Some(x),
                    });
                    RoutingDecision {
                        t: self.t,
                        explored: true,
                        chosen: largest,
                        y: vec![true; m],
                        s_hat,
                        best_by_label: None,
                        realized_satisfaction: None,
                        cost_incurred,
                        queue_before,
                        queue_after: queue_before,
                    }
                }
                None => {
                    self.rng = rng_before;
                    let missing = self
                        .config
                        .zoo
                        .ids()
                        .find(|&id| labels.label(event, id).is_none())
                        .map_or(0, |id| id.0);
                    return Err(Error::MissingLabel {
                        t: self.t,
                        model: missing,
                    });
                }
            }
        } else {
            let chosen = match self.config.selection {
                SelectionRule::DriftPlusPenalty => {
                    let scaled: Vec<f64> = costs
                        .iter()
                        .map(|c| c * self.config.objective_cost_scale)
                        .collect();
                    solve_per_request(sla.v, queue_before, sla.alpha, &scaled, &s_hat)?
                }
                SelectionRule::Threshold {
                    small,
                    large,
                    threshold,
                } => crate::baselines::route_threshold(s_hat[small.0], threshold, small, large),
            };
            let mut y = vec![false; m];
            y[chosen.0] = true;
            let realized = labels.label(event, chosen);
            match realized {
                Some(bit) => self.queue.push(sla.alpha, bit)?,
                None => self.pending.push_back(PendingDecision {
                    t: self.t,
                    chosen,
                    exploration_features: None,
                }),
            }
            RoutingDecision {
                t: self.t,
                explored: false,
                chosen,
                y,
                s_hat,
                best_by_label: None,
                realized_satisfaction: realized,
                cost_incurred: costs[chosen.0],
                queue_before,
                queue_after: self.queue.q,
            }
        };
        self.t += 1;
        Ok(decision)
    }

    fn check_feedback_order(&self, decision_t: u64) -> Result<&PendingDecision> {
        match self.pending.front() {
            Some(front) if front.t == decision_t => Ok(front),
            _ if self.pending.iter().any(|p| p.t == decision_t) => Err(Error::FeedbackOutOfOrder {
                got: decision_t,
                oldest: self.pending.front().map_or(0, |p| p.t),
            }),
            _ if decision_t >= 1 && decision_t < self.t => Err(Error::DuplicateFeedback(decision_t)),
            _ => Err(Error::UnknownDecision(decision_t)),
        }
    }

    /// Applies the satisfaction bit of the oldest pending decision.
    pub fn apply_feedback(&mut self, decision_t: u64, satisfied: bool) -> Result<VirtualQueue> {
        let pending = self.check_feedback_order(decision_t)?;
        if pending.exploration_features.is_some() {
            return Err(Error::LabelsRequired(decision_t));
        }
        self.queue.push(self.config.sla.alpha, satisfied)?;
        self.pending.pop_front();
        Ok(self.queue)
    }

    /// Applies a full label vector to the oldest pending decision. On an
    /// exploration decision this also trains the predictor.
    pub fn apply_full_feedback(&mut self, decision_t: u64, labels: &[bool]) -> Result<VirtualQueue> {
        let pending = self.check_feedback_order(decision_t)?.clone();
        if labels.len() != self.config.zoo.len() {
            return Err(Error::Dimension {
                expected: self.config.zoo.len(),
                got: labels.len(),
            });
        }
        if let Some(x) = &pending.exploration_features {
            self.predictor.sgd_step(x, labels)?;
        }
        self.queue.push(self.config.sla.alpha, labels[pending.chosen.0])?;
        self.pending.pop_front();
        Ok(self.queue)
    }
}

/// Argmax of binary labels, ties toward the largest model, then the lowest
/// index.
pub fn best_by_label(labels: &[bool], largest: ModelId) -> ModelId {
    if labels[largest.0] || labels.iter().all(|&b| !b) {
        return largest;
    }
    ModelId(labels.iter().position(|&b| b).unwrap_or(largest.0))
}
