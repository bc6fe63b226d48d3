use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a zoo member, `0..M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelId(pub usize);

impl ModelId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Simulator-only description of how a model satisfies requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroundTruthModel {
    /// Bernoulli with a fixed rate, independent of the request.
    FixedRate { rate: f64 },
    /// `P(s = 1 | x) = sigmoid(⟨w, [x; 1]⟩)`; the last weight is the bias.
    Logistic { weights: Vec<f64> },
}

impl GroundTruthModel {
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        match self {
            GroundTruthModel::FixedRate { rate } => Ok(*rate),
            GroundTruthModel::Logistic { weights } => {
                if weights.len() != x.len() + 1 {
                    return Err(Error::Dimension {
                        expected: weights.len().saturating_sub(1),
                        got: x.len(),
                    });
                }
                let z = weights[x.len()]
                    + weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
                Ok(crate::predictor::sigmoid(z))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GroundTruthModel::FixedRate { rate } if !(0.0..=1.0).contains(rate) => {
                Err(Error::param(format!("fixed satisfaction rate {rate} outside [0,1]")))
            }
            GroundTruthModel::Logistic { weights } if weights.iter().any(|w| !w.is_finite()) => {
                Err(Error::NonFinite("ground-truth weights"))
            }
            _ => Ok(()),
        }
    }
}

/// One zoo member. Costs are in joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub base_cost: f64,
    #[serde(default)]
    pub cost_per_token: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<GroundTruthModel>,
}

impl ModelProfile {
    pub fn new(name: impl Into<String>, base_cost: f64) -> Self {
        Self {
            name: name.into(),
            base_cost,
            cost_per_token: 0.0,
            truth: None,
        }
    }

    pub fn with_truth(mut self, truth: GroundTruthModel) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn with_cost_per_token(mut self, cost_per_token: f64) -> Self {
        self.cost_per_token = cost_per_token;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooConfig {
    pub models: Vec<ModelProfile>,
    pub largest: ModelId,
}

impl ZooConfig {
    /// Builds a zoo, designating the model with the highest base cost as the
    /// largest one.
    pub fn new(models: Vec<ModelProfile>) -> Result<Self> {
        let largest = models
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.base_cost.total_cmp(&b.1.base_cost))
            .map(|(i, _)| ModelId(i))
            .ok_or(Error::EmptyZoo)?;
        let zoo = Self { models, largest };
        zoo.validate()?;
        Ok(zoo)
    }

    pub fn with_largest(models: Vec<ModelProfile>, largest: ModelId) -> Result<Self> {
        let zoo = Self { models, largest };
        zoo.validate()?;
        Ok(zoo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::EmptyZoo);
        }
        if self.largest.0 >= self.models.len() {
            return Err(Error::param(format!(
                "largest model index {} outside zoo of {}",
                self.largest.0,
                self.models.len()
            )));
        }
        for m in &self.models {
            if !(m.base_cost > 0.0 && m.base_cost.is_finite()) {
                return Err(Error::param(format!(
                    "model {}: base cost must be positive, got {}",
                    m.name, m.base_cost
                )));
            }
            if !(m.cost_per_token >= 0.0 && m.cost_per_token.is_finite()) {
                return Err(Error::param(format!(
                    "model {}: cost per token must be nonnegative",
                    m.name
                )));
            }
            if let Some(truth) = &m.truth {
                truth.validate()?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ModelId> {
        (0..self.models.len()).map(ModelId)
    }

    /// Index of the cheapest model by base cost (lowest index on ties).
    pub fn cheapest(&self) -> ModelId {
        let mut best = 0;
        for (i, m) in self.models.iter().enumerate() {
            if m.base_cost < self.models[best].base_cost {
                best = i;
            }
        }
        ModelId(best)
    }
}

/// Request payload: either a dense vector or raw text to featurize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestInput {
    Features(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestEvent {
    /// 1-based request index.
    pub t: u64,
    pub token_count: u64,
    pub input: RequestInput,
    /// Per-model satisfaction bits, when known up front (traces, simulator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<bool>>,
    /// Per-model costs in joules. When absent the zoo's cost model is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
}

impl RequestEvent {
    pub fn from_features(t: u64, token_count: u64, features: Vec<f64>) -> Self {
        Self {
            t,
            token_count,
            input: RequestInput::Features(features),
            labels: None,
            costs: None,
        }
    }

    pub fn from_text(t: u64, token_count: u64, text: impl Into<String>) -> Self {
        Self {
            t,
            token_count,
            input: RequestInput::Text(text.into()),
            labels: None,
            costs: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn with_costs(mut self, costs: Vec<f64>) -> Self {
        self.costs = Some(costs);
        self
    }
}

/// Service-level targets and controller knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaParams {
    /// Target long-run satisfaction rate.
    pub alpha: f64,
    /// Cost weight in the per-request objective.
    pub v: f64,
    /// Exploration scale.
    pub c: f64,
}

impl SlaParams {
    pub fn new(alpha: f64, v: f64, c: f64) -> Result<Self> {
        let sla = Self { alpha, v, c };
        sla.validate()?;
        Ok(sla)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::param(format!("V must be positive, got {}", self.v)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

impl Default for SlaParams {
    fn default() -> Self {
        Self {
            alpha: 0.66,
            v: 0.001,
            c: 0.1,
        }
    }
}

/// Everything the router did for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub t: u64,
    pub explored: bool,
    /// Model whose output is returned to the caller.
    pub chosen: ModelId,
    /// Per-model selection indicators. All set on exploration steps.
    pub y: Vec<bool>,
    pub s_hat: Vec<f64>,
    /// Argmax of the exploration labels, ties broken toward the largest
    /// model. Only set on exploration steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_by_label: Option<ModelId>,
    pub realized_satisfaction: Option<bool>,
    /// Joules charged for this request.
    pub cost_incurred: f64,
    pub queue_before: f64,
    pub queue_after: f64,
}

impl RoutingDecision {
    pub fn selected_count(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }
}
