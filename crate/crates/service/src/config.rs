use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use messplus_core::predictor::{FeatureExtractor, LearningRateSchedule};
use messplus_core::router::{RouterConfig, DEFAULT_OBJECTIVE_COST_SCALE};
use messplus_core::types::{ModelId, ModelProfile, SlaParams, ZooConfig};

use crate::error::ServiceError;

pub const ENV_PORT: &str = "MESSPLUS_PORT";
pub const ENV_DATA_DIR: &str = "MESSPLUS_DATA_DIR";

/// Top-level service configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Records per event-log segment before a new segment is started.
    #[serde(default = "default_segment_records")]
    pub segment_records: u64,
    #[serde(default)]
    pub tenants: Vec<TenantConfig>,
}

fn default_port() -> u16 {
    8080
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

fn default_segment_records() -> u64 {
    10_000
}

/// How a tenant learns whether its requests were satisfied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Satisfaction arrives later through `/v1/feedback`.
    #[default]
    Deferred,
    /// Every route call must carry the full label vector.
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TenantConfig {
    pub id: String,
    pub sla: SlaParams,
    pub models: Vec<ModelProfile>,
    /// Index of the model returned on exploration; defaults to the one with
    /// the highest base cost.
    #[serde(default)]
    pub largest: Option<ModelId>,
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
    pub mode: FeedbackMode,
    /// Explore in deferred mode; exploration decisions then need a full
    /// label vector as feedback.
    #[serde(default)]
    pub shadow_exploration: bool,
}

fn default_cost_scale() -> f64 {
    DEFAULT_OBJECTIVE_COST_SCALE
}

impl TenantConfig {
    pub fn router_config(&self) -> Result<RouterConfig, ServiceError> {
        let zoo = match self.largest {
            Some(l) => ZooConfig::with_largest(self.models.clone(), l)?,
            None => ZooConfig::new(self.models.clone())?,
        };
        let mut cfg = RouterConfig::new(self.sla, zoo, self.extractor, self.seed);
        cfg.mu = self.mu;
        cfg.schedule = self.schedule;
        cfg.objective_cost_scale = self.objective_cost_scale;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `MESSPLUS_PORT` and `MESSPLUS_DATA_DIR` when set.
    pub fn apply_env(&mut self) -> Result<(), ServiceError> {
        self.apply_overrides(
            std::env::var(ENV_PORT).ok().as_deref(),
            std::env::var_os(ENV_DATA_DIR).map(PathBuf::from),
        )
    }

    pub fn apply_overrides(&mut self, port: Option<&str>, data_dir: Option<PathBuf>) -> Result<(), ServiceError> {
        if let Some(p) = port {
            self.port = p
                .parse()
                .map_err(|_| ServiceError::Config(format!("{ENV_PORT}={p} is not a port number")))?;
        }
        if let Some(d) = data_dir {
            self.data_dir = d;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.segment_records == 0 {
            return Err(ServiceError::Config("segment_records must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.tenants {
            if t.id.is_empty() || !t.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(ServiceError::Config(format!(
                    "tenant id {:?} must be nonempty ASCII alphanumerics, '-' or '_'",
                    t.id
                )));
            }
            if !seen.insert(&t.id) {
                return Err(ServiceError::Config(format!("duplicate tenant {}", t.id)));
            }
            t.router_config()
                .map_err(|e| ServiceError::Config(format!("tenant {}: {e}", t.id)))?;
        }
        Ok(())
    }
}
