//! Cost-optimal, SLA-constrained model selection over a zoo of models.
//!
//! Each incoming request is routed to exactly one model by minimizing a
//! drift-plus-penalty score `V·E_m + Q·(α − ŝ_m)`, where `E_m` is the cost of
//! model `m`, `ŝ_m` is the predicted probability that `m` satisfies the
//! request, and `Q` is a virtual queue holding the accumulated shortfall
//! against the target satisfaction rate `α`. With a decaying probability
//! `min(1, c/t^¼)` the router instead explores: every model is queried, the
//! full label vector trains the predictor with one SGD step, and the largest
//! model's output is returned.
//!
//! Module map:
//!
//! - [`types`], [`queue`], [`cost`]: domain types, the virtual queue and the
//!   per-request cost model.
//! - [`predictor`]: feature extraction plus the online multi-label logistic
//!   satisfaction predictor.
//! - [`router`]: the control loop.
//! - [`baselines`]: fixed, educated-guessing, threshold and oracle policies.
//! - [`simulator`]: synthetic workloads, trace files, experiment runs, sweeps.
//! - [`metrics`]: running aggregates, compliance and overhead reports.

pub mod baselines;
pub mod cost;
pub mod error;
pub mod metrics;
pub mod predictor;
pub mod queue;
pub mod rng;
pub mod router;
pub mod simulator;
pub mod types;

pub use cost::{request_cost, zoo_cost_extremes};
pub use error::{Error, Result};
pub use queue::{queue_update, VirtualQueue};
pub use types::{
    GroundTruthModel, ModelId, ModelProfile, RequestEvent, RequestInput, RoutingDecision,
    SlaParams, ZooConfig,
};

/// Joules per megajoule.
pub const JOULES_PER_MJ: f64 = 1.0e6;
