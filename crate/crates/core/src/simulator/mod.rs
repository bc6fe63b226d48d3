//! Synthetic workloads, trace replay and experiment harness.
//!
//! Features come from a seeded mixture of isotropic Gaussians. Each model's
//! satisfaction follows its [`GroundTruthModel`], drawn independently per
//! model unless [`LabelCoupling::Shared`] is selected.

mod experiment;
mod sweep;
mod trace;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use experiment::{run_experiment, run_router, ExperimentRun, PolicySpec};
pub use sweep::{sweep, SweepCell, SweepGrid, SweepReport};
pub use trace::{zoo_hash, ExperimentTrace, TraceHeader, TraceRecord, TRACE_SCHEMA_VERSION};

use crate::cost::cost_for_tokens;
use crate::error::{Error, Result};
use crate::predictor::sigmoid;
use crate::rng::{streams, SeededRng};
use crate::types::{GroundTruthModel, ModelProfile, SlaParams, ZooConfig};
use crate::JOULES_PER_MJ;

/// Reference zoo: operating cost (MJ) of a 1B, 8B and 70B model.
pub const REFERENCE_COSTS_MJ: [f64; 3] = [0.12, 0.54, 2.91];
/// Marginal satisfaction rates of the reference zoo.
pub const REFERENCE_RATES: [f64; 3] = [0.5828, 0.6820, 0.7370];
pub const REFERENCE_NAMES: [&str; 3] = ["L1B", "L8B", "L70B"];

const CALIBRATION_SAMPLES: usize = 40_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelCoupling {
    /// Independent draw per model.
    #[default]
    Independent,
    /// One uniform draw per request, shared by all models. A request
    /// satisfied by a model with a lower probability is then also satisfied
    /// by every model with a higher one.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenRange {
    pub min: u64,
    pub max: u64,
}

impl Default for TokenRange {
    fn default() -> Self {
        Self { min: 16, max: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub zoo: ZooConfig,
    pub sla: SlaParams,
    pub horizon: u64,
    pub dim: usize,
    pub cluster_count: usize,
    /// Standard deviation of cluster centers around the origin.
    #[serde(default = "default_spread")]
    pub cluster_spread: f64,
    /// Within-cluster standard deviation.
    #[serde(default = "default_spread")]
    pub cluster_std: f64,
    pub seed: u64,
    /// Probability of flipping each sampled label.
    #[serde(default)]
    pub label_noise: f64,
    #[serde(default)]
    pub label_coupling: LabelCoupling,
    #[serde(default)]
    pub tokens: TokenRange,
    /// Relative uniform jitter applied to each cost, `E·(1 + U(−a, a))`.
    #[serde(default)]
    pub cost_noise: f64,
}

fn default_spread() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.zoo.validate()?;
        self.sla.validate()?;
        if self.horizon == 0 || self.dim == 0 || self.cluster_count == 0 {
            return Err(Error::param("horizon, dim and cluster_count must be positive"));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::param("label_noise must lie in [0, 0.5)"));
        }
        if !(0.0..1.0).contains(&self.cost_noise) {
            return Err(Error::param("cost_noise must lie in [0, 1)"));
        }
        if self.tokens.min > self.tokens.max {
            return Err(Error::param("token range is empty"));
        }
        if !(self.cluster_spread >= 0.0 && self.cluster_std >= 0.0) {
            return Err(Error::param("cluster spreads must be nonnegative"));
        }
        for m in &self.zoo.models {
            match &m.truth {
                None => return Err(Error::param(format!("model {} has no ground truth", m.name))),
                Some(GroundTruthModel::Logistic { weights }) if weights.len() != self.dim + 1 => {
                    return Err(Error::Dimension {
                        expected: self.dim + 1,
                        got: weights.len(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Mixture centers, a pure function of the seed.
    pub fn cluster_centers(&self) -> Vec<Vec<f64>> {
        let mut rng = SeededRng::new(self.seed, streams::SCENARIO);
        (0..self.cluster_count)
            .map(|_| {
                (0..self.dim)
                    .map(|_| self.cluster_spread * rng.inner().sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    fn sample_features(&self, centers: &[Vec<f64>], rng: &mut SeededRng) -> Vec<f64> {
        let c = &centers[rng.inner().gen_range(0..centers.len())];
        c.iter()
            .map(|mu| mu + self.cluster_std * rng.inner().sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Highest marginal satisfaction rate of any model, estimated on a fixed
    /// calibration sample.
    pub fn max_truth_rate(&self) -> Result<f64> {
        let rates = self.truth_rates()?;
        Ok(rates.into_iter().fold(0.0, f64::max))
    }

    /// Marginal satisfaction rate per model (before label noise).
    pub fn truth_rates(&self) -> Result<Vec<f64>> {
        let sample = self.calibration_sample();
        self.zoo
            .models
            .iter()
            .map(|m| {
                let truth = m.truth.as_ref().ok_or_else(|| Error::param("missing ground truth"))?;
                let mut total = 0.0;
                for x in &sample {
                    total += truth.probability(x)?;
                }
                Ok(total / sample.len() as f64)
            })
            .collect()
    }

    fn calibration_sample(&self) -> Vec<Vec<f64>> {
        let centers = self.cluster_centers();
        let mut rng = SeededRng::new(self.seed, streams::CALIBRATION);
        (0..CALIBRATION_SAMPLES)
            .map(|_| self.sample_features(&centers, &mut rng))
            .collect()
    }

    /// reference zoo with fixed satisfaction rates that ignore the request.
    pub fn fixed_rate(rates: &[f64], sla: SlaParams, horizon: u64, seed: u64) -> Result<Self> {
        let models = reference_profiles()
            .into_iter()
            .zip(rates)
            .map(|(p, &rate)| p.with_truth(GroundTruthModel::FixedRate { rate }))
            .collect();
        let cfg = Self {
            zoo: ZooConfig::new(models)?,
            sla,
            horizon,
            dim: 8,
            cluster_count: 4,
            cluster_spread: 1.0,
            cluster_std: 1.0,
            seed,
            label_noise: 0.0,
            label_coupling: LabelCoupling::Independent,
            tokens: TokenRange::default(),
            cost_noise: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The canonical scenario: reference costs, logistic truths whose
    /// marginal rates are calibrated to the reference rates, α = 0.66,
    /// V = 0.001, c = 0.1.
    pub fn canonical(horizon: u64, seed: u64) -> Result<Self> {
        Self::calibrated_logistic(
            &REFERENCE_RATES,
            SlaParams::new(0.66, 0.001, 0.1)?,
            horizon,
            seed,
            &LogisticShape::default(),
        )
    }

    /// Reference zoo with logistic truths `sigmoid(k·(b_m − ⟨u, x⟩))` sharing a
    /// "difficulty" direction `u`; each `b_m` is found by bisection so the
    /// model's marginal rate matches `rates[m]`.
    pub fn calibrated_logistic(
        rates: &[f64],
        sla: SlaParams,
        horizon: u64,
        seed: u64,
        shape: &LogisticShape,
    ) -> Result<Self> {
        if rates.len() != REFERENCE_COSTS_MJ.len() {
            return Err(Error::param("one rate per reference model is required"));
        }
        let dim = shape.dim;
        let sharpness = shape.sharpness;
        let mut cfg = Self {
            zoo: ZooConfig::new(reference_profiles())?,
            sla,
            horizon,
            dim,
            cluster_count: shape.cluster_count,
            cluster_spread: shape.cluster_spread,
            cluster_std: shape.cluster_std,
            seed,
            label_noise: 0.0,
            label_coupling: LabelCoupling::Independent,
            tokens: TokenRange::default(),
            cost_noise: 0.0,
        };
        let direction = difficulty_direction(dim);
        let sample = cfg.calibration_sample();
        let difficulty: Vec<f64> = sample
            .iter()
            .map(|x| x.iter().zip(&direction).map(|(a, b)| a * b).sum())
            .collect();
        for (profile, &rate) in cfg.zoo.models.iter_mut().zip(rates) {
            let b = calibrate_threshold(&difficulty, sharpness, rate)?;
            let mut weights: Vec<f64> = direction.iter().map(|u| -sharpness * u).collect();
            weights.push(sharpness * b);
            profile.truth = Some(GroundTruthModel::Logistic { weights });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Feature geometry and truth sharpness for calibrated logistic scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticShape {
    pub dim: usize,
    pub cluster_count: usize,
    pub cluster_spread: f64,
    pub cluster_std: f64,
    pub sharpness: f64,
}

impl Default for LogisticShape {
    fn default() -> Self {
        Self {
            dim: 8,
            cluster_count: 4,
            cluster_spread: 3.0,
            cluster_std: 0.5,
            sharpness: 4.0,
        }
    }
}

fn reference_profiles() -> Vec<ModelProfile> {
    REFERENCE_NAMES
        .iter()
        .zip(REFERENCE_COSTS_MJ)
        .map(|(name, mj)| ModelProfile::new(*name, mj * JOULES_PER_MJ))
        .collect()
}

fn difficulty_direction(dim: usize) -> Vec<f64> {
    let v = 1.0 / (dim as f64).sqrt();
    vec![v; dim]
}

/// Solves `mean_i sigmoid(k·(b − h_i)) = rate` for `b`.
fn calibrate_threshold(difficulty: &[f64], k: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::param(format!("rate {rate} must lie in (0,1)")));
    }
    let mean_rate = |b: f64| {
        difficulty.iter().map(|h| sigmoid(k * (b - h))).sum::<f64>() / difficulty.len() as f64
    };
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_rate(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lazily draws trace records from a scenario, without a horizon. The first
/// `n` records equal those of [`generate_trace`] for any horizon ≥ `n`.
#[derive(Debug, Clone)]
pub struct TraceGenerator {
    config: ScenarioConfig,
    centers: Vec<Vec<f64>>,
    rng: SeededRng,
    noise: SeededRng,
    t: u64,
}

impl TraceGenerator {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            centers: config.cluster_centers(),
            rng: SeededRng::new(config.seed, streams::TRACE),
            noise: SeededRng::new(config.seed, streams::NOISE),
            config: config.clone(),
            t: 0,
        })
    }

    pub fn header(&self) -> TraceHeader {
        TraceHeader {
            schema_version: TRACE_SCHEMA_VERSION,
            models: self.config.zoo.len(),
            dim: self.config.dim,
            zoo_hash: zoo_hash(&self.config.zoo),
        }
    }

    pub fn next_record(&mut self) -> Result<TraceRecord> {
        let config = &self.config;
        self.t += 1;
        let features = config.sample_features(&self.centers, &mut self.rng);
        let token_count = self.rng.inner().gen_range(config.tokens.min..=config.tokens.max);
        let shared = self.rng.uniform();
        let mut labels = Vec::with_capacity(config.zoo.len());
        for profile in &config.zoo.models {
            let p = profile
                .truth
                .as_ref()
                .expect("validated")
                .probability(&features)?;
            let u = match config.label_coupling {
                LabelCoupling::Shared => shared,
                LabelCoupling::Independent => self.rng.uniform(),
            };
            let mut bit = u < p;
            if config.label_noise > 0.0 && self.noise.bernoulli(config.label_noise) {
                bit = !bit;
            }
            labels.push(u8::from(bit));
        }
        let mut costs = Vec::with_capacity(config.zoo.len());
        for profile in &config.zoo.models {
            let base = cost_for_tokens(profile, token_count);
            costs.push(if config.cost_noise > 0.0 {
                base * (1.0 + config.cost_noise * (2.0 * self.noise.uniform() - 1.0))
            } else {
                base
            });
        }
        Ok(TraceRecord {
            t: self.t,
            token_count,
            features,
            labels,
            costs,
        })
    }
}

impl Iterator for TraceGenerator {
    type Item = Result<TraceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_record())
    }
}

/// Draws a full trace from `config`. Deterministic given the seed.
pub fn generate_trace(config: &ScenarioConfig) -> Result<ExperimentTrace> {
    let mut gen = TraceGenerator::new(config)?;
    let records = (&mut gen)
        .take(config.horizon as usize)
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentTrace {
        header: gen.header(),
        records,
    })
}
