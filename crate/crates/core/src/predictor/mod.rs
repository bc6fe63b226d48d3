//! Online multi-label satisfaction predictor.
//!
//! One logistic head per model over `[x; 1]`. The training objective per
//! sample is the mean binary cross entropy across models plus `(μ/2)‖z‖²`,
//! minimized with one SGD step per exploration request.

mod features;
mod schedule;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use features::{tokens, FeatureExtractor};
pub use schedule::LearningRateSchedule;

use crate::error::{Error, Result};

/// Probabilities are clamped to `[ε, 1 − ε]` before taking logs.
pub const LOSS_CLAMP: f64 = 1e-12;

pub const CHECKPOINT_VERSION: u32 = 1;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorState {
    /// Input feature dimension `d` (without the bias column).
    pub dim: usize,
    /// Number of models `M`.
    pub models: usize,
    pub mu: f64,
    pub schedule: LearningRateSchedule,
    /// SGD steps taken so far.
    pub k: u64,
    /// Row-major `M × (d + 1)`; the last column of each row is the bias.
    pub z: Vec<f64>,
}

impl PredictorState {
    /// Zero-initialized predictor, so every model starts at `ŝ = 0.5`.
    pub fn new(dim: usize, models: usize, mu: f64, schedule: LearningRateSchedule) -> Result<Self> {
        if dim == 0 || models == 0 {
            return Err(Error::param("predictor needs d ≥ 1 and M ≥ 1"));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::param(format!("regularization must be nonnegative, got {mu}")));
        }
        schedule.validate()?;
        Ok(Self {
            dim,
            models,
            mu,
            schedule,
            k: 0,
            z: vec![0.0; models * (dim + 1)],
        })
    }

    pub fn row_len(&self) -> usize {
        self.dim + 1
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let w = self.row_len();
        &self.z[m * w..(m + 1) * w]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictor input"));
        }
        Ok(())
    }

    fn logit(&self, m: usize, x: &[f64]) -> f64 {
        let row = self.row(m);
        row[self.dim] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
    }

    /// `ŝ_m = sigmoid(⟨z_m, [x; 1]⟩)` for every model.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok((0..self.models).map(|m| sigmoid(self.logit(m, x))).collect())
    }

    pub fn squared_norm(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum()
    }

    /// Mean cross entropy across models plus the `(μ/2)‖z‖²` penalty.
    pub fn loss(&self, x: &[f64], labels: &[bool]) -> Result<f64> {
        self.check_labels(labels)?;
        let s_hat = self.predict(x)?;
        let data = cross_entropy(&s_hat, labels);
        Ok(data + 0.5 * self.mu * self.squared_norm())
    }

    fn check_labels(&self, labels: &[bool]) -> Result<()> {
        if labels.len() != self.models {
            return Err(Error::Dimension {
                expected: self.models,
                got: labels.len(),
            });
        }
        Ok(())
    }

    /// Gradient of [`PredictorState::loss`] with respect to `z`, row-major.
    pub fn gradient(&self, x: &[f64], labels: &[bool]) -> Result<Vec<f64>> {
        self.check_labels(labels)?;
        let s_hat = self.predict(x)?;
        let w = self.row_len();
        let inv_m = 1.0 / self.models as f64;
        let mut grad = Vec::with_capacity(self.z.len());
        for (m, (&p, &s)) in s_hat.iter().zip(labels).enumerate() {
            let residual = inv_m * (p - if s { 1.0 } else { 0.0 });
            let row = &self.z[m * w..(m + 1) * w];
            grad.extend(x.iter().chain(std::iter::once(&1.0)).zip(row).map(|(xi, zi)| {
                residual * xi + self.mu * zi
            }));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(grad)
    }

    /// One SGD step: `z ← z − η_k ∇loss`, `k ← k + 1`.
    pub fn sgd_step(&mut self, x: &[f64], labels: &[bool]) -> Result<()> {
        let grad = self.gradient(x, labels)?;
        let eta = self.schedule.rate(self.k + 1);
        let next: Vec<f64> = self.z.iter().zip(&grad).map(|(z, g)| z - eta * g).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictor weights"));
        }
        self.z = next;
        self.k += 1;
        Ok(())
    }

    pub fn to_checkpoint(&self) -> PredictorCheckpoint {
        PredictorCheckpoint {
            schema_version: CHECKPOINT_VERSION,
            state: self.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(&self.to_checkpoint())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        PredictorCheckpoint::from_json(&bytes)
    }
}

/// Mean binary cross entropy with clamped probabilities.
pub fn cross_entropy(s_hat: &[f64], labels: &[bool]) -> f64 {
    let total: f64 = s_hat
        .iter()
        .zip(labels)
        .map(|(&p, &s)| {
            let p = p.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
            if s {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum();
    -total / s_hat.len() as f64
}

/// Versioned JSON checkpoint of a predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorCheckpoint {
    pub schema_version: u32,
    #[serde(flatten)]
    pub state: PredictorState,
}

impl PredictorCheckpoint {
    pub fn from_json(bytes: &[u8]) -> Result<PredictorState> {
        let ck: PredictorCheckpoint = serde_json::from_slice(bytes)?;
        if ck.schema_version != CHECKPOINT_VERSION {
            return Err(Error::param(format!(
                "unsupported predictor checkpoint version {}",
                ck.schema_version
            )));
        }
        let s = ck.state;
        if s.z.len() != s.models * (s.dim + 1) {
            return Err(Error::Dimension {
                expected: s.models * (s.dim + 1),
                got: s.z.len(),
            });
        }
        s.schedule.validate()?;
        Ok(s)
    }
}
