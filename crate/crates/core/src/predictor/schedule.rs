use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step sizes for the online predictor. `k` is the 1-based index of the SGD
/// step being taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRateSchedule {
    /// `η_k = min(2 / (μ (k + 1)), 1 / L)`, the schedule used by the PL
    /// convergence argument.
    PlSchedule { mu: f64, l_smooth: f64 },
    /// `η_k = η0 / (1 + k / k0)`.
    InverseDecay { eta0: f64, k0: f64 },
    Constant { eta: f64 },
}

impl Default for LearningRateSchedule {
    fn default() -> Self {
        LearningRateSchedule::InverseDecay {
            eta0: 0.05,
            k0: 200.0,
        }
    }
}

impl LearningRateSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LearningRateSchedule::PlSchedule { mu, l_smooth } => {
                mu > 0.0 && l_smooth > 0.0 && mu <= l_smooth && l_smooth.is_finite()
            }
            LearningRateSchedule::InverseDecay { eta0, k0 } => {
                eta0 > 0.0 && k0 > 0.0 && eta0.is_finite() && k0.is_finite()
            }
            LearningRateSchedule::Constant { eta } => eta > 0.0 && eta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid learning-rate schedule {self:?}")))
        }
    }

    pub fn rate(&self, k: u64) -> f64 {
        let k = k.max(1) as f64;
        match *self {
            LearningRateSchedule::PlSchedule { mu, l_smooth } => {
                (2.0 / (mu * (k + 1.0))).min(1.0 / l_smooth)
            }
            LearningRateSchedule::InverseDecay { eta0, k0 } => eta0 / (1.0 + k / k0),
            LearningRateSchedule::Constant { eta } => eta,
        }
    }
}
