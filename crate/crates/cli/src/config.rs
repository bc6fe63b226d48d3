//! Run configuration: a TOML file plus command-line overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use messplus_core::simulator::{LogisticShape, PolicySpec, ScenarioConfig, SweepGrid, REFERENCE_RATES};
use messplus_core::types::{ModelId, SlaParams};

/// Scenario to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSource {
    /// Reference zoo with logistic truths calibrated to `rates`.
    Calibrated {
        #[serde(default = "reference_rates")]
        rates: Vec<f64>,
        #[serde(default)]
        shape: LogisticShape,
    },
    /// A fully specified scenario.
    Custom(ScenarioConfig),
}

fn reference_rates() -> Vec<f64> {
    REFERENCE_RATES.to_vec()
}

impl Default for ScenarioSource {
    fn default() -> Self {
        ScenarioSource::Calibrated {
            rates: reference_rates(),
            shape: LogisticShape::default(),
        }
    }
}

/// Contents of `--config` for simulate, replay, sweep and report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: ScenarioSource,
    #[serde(default = "default_sla")]
    pub sla: SlaParams,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    /// Requests before compliance is judged.
    #[serde(default)]
    pub grace_t0: u64,
    #[serde(default = "yes")]
    pub write_trace: bool,
    #[serde(default)]
    pub sweep: SweepAxes,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub vs: Vec<f64>,
    #[serde(default)]
    pub cs: Vec<f64>,
}

fn default_sla() -> SlaParams {
    SlaParams {
        alpha: 0.66,
        v: 0.001,
        c: 0.1,
    }
}

fn default_horizon() -> u64 {
    20_000
}

fn default_seeds() -> Vec<u64> {
    vec![42, 43, 44]
}

fn yes() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
    pub c: Vec<f64>,
    pub horizon: Option<u64>,
    pub policies: Vec<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    /// Applies single-valued overrides. Multi-valued SLA flags are only
    /// meaningful for sweeps and go to the sweep axes instead.
    pub fn apply(&mut self, o: &Overrides, allow_lists: bool) -> Result<()> {
        if !o.seeds.is_empty() {
            self.seeds = o.seeds.clone();
        }
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        for (name, values, slot, axis) in [
            ("--alpha", &o.alpha, &mut self.sla.alpha, &mut self.sweep.alphas),
            ("--v", &o.v, &mut self.sla.v, &mut self.sweep.vs),
            ("--c", &o.c, &mut self.sla.c, &mut self.sweep.cs),
        ] {
            match values.len() {
                0 => {}
                1 => {
                    *slot = values[0];
                    if allow_lists {
                        *axis = values.clone();
                    }
                }
                _ if allow_lists => *axis = values.clone(),
                _ => bail!("{name} takes one value here"),
            }
        }
        if !o.policies.is_empty() {
            let mut policies = Vec::new();
            for p in &o.policies {
                policies.extend(parse_policy(p)?);
            }
            self.policies = policies;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.sla.validate().context("invalid SLA parameters")?;
        if self.horizon == 0 {
            bail!("horizon must be positive");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        for (a, v, c) in self.grid_points() {
            SlaParams::new(a, v, c).with_context(|| format!("sweep point alpha={a} v={v} c={c}"))?;
        }
        Ok(())
    }

    fn grid_points(&self) -> Vec<(f64, f64, f64)> {
        let g = self.grid();
        let mut out = Vec::new();
        for &a in &g.alphas {
            for &v in &g.vs {
                for &c in &g.cs {
                    out.push((a, v, c));
                }
            }
        }
        out
    }

    /// Sweep grid; empty axes fall back to the configured SLA value.
    pub fn grid(&self) -> SweepGrid {
        let or = |axis: &Vec<f64>, v: f64| if axis.is_empty() { vec![v] } else { axis.clone() };
        SweepGrid {
            alphas: or(&self.sweep.alphas, self.sla.alpha),
            vs: or(&self.sweep.vs, self.sla.v),
            cs: or(&self.sweep.cs, self.sla.c),
            seeds: self.seeds.clone(),
        }
    }

    /// Policies to run; MESS+ when none are configured.
    pub fn policies(&self) -> Vec<PolicySpec> {
        if self.policies.is_empty() {
            vec![PolicySpec::messplus()]
        } else {
            self.policies.clone()
        }
    }

    /// The scenario for one seed, with this config's SLA and horizon.
    pub fn scenario(&self, seed: u64) -> Result<ScenarioConfig> {
        let cfg = match &self.scenario {
            ScenarioSource::Calibrated { rates, shape } => {
                ScenarioConfig::calibrated_logistic(rates, self.sla, self.horizon, seed, shape)?
            }
            ScenarioSource::Custom(c) => {
                let mut c = c.clone();
                c.sla = self.sla;
                c.horizon = self.horizon;
                c.seed = seed;
                c.validate()?;
                c
            }
        };
        Ok(cfg)
    }
}

/// Parses a `--policy` value: `messplus`, `guessing`, `oracle`,
/// `single:<index>`, `threshold:<small>:<large>:<x>`, or `all` for every
/// single-model policy plus guessing, MESS+ and the oracle over three models.
pub fn parse_policy(s: &str) -> Result<Vec<PolicySpec>> {
    let parts: Vec<&str> = s.split(':').collect();
    let index = |p: &str| -> Result<ModelId> {
        Ok(ModelId(p.parse().with_context(|| format!("bad model index {p:?}"))?))
    };
    Ok(match parts.as_slice() {
        ["messplus"] => vec![PolicySpec::messplus()],
        ["guessing"] => vec![PolicySpec::Guessing],
        ["oracle"] => vec![PolicySpec::Oracle],
        ["single", m] => vec![PolicySpec::Single { model: index(m)? }],
        ["threshold", small, large, x] => vec![PolicySpec::Threshold {
            small: index(small)?,
            large: index(large)?,
            threshold: x.parse().with_context(|| format!("bad threshold {x:?}"))?,
        }],
        ["all"] => {
            let mut v: Vec<PolicySpec> = (0..3).map(|m| PolicySpec::Single { model: ModelId(m) }).collect();
            v.extend([PolicySpec::Guessing, PolicySpec::messplus(), PolicySpec::Oracle]);
            v
        }
        _ => bail!("unknown policy {s:?}"),
    })
}
