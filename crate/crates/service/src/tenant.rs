//! One router per tenant, persisted as an event log plus an optional
//! checkpoint.
//!
//! Every state change goes through [`apply`], both for live calls and for
//! replay, so a recovered tenant is identical to the one that wrote the log.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use messplus_core::metrics::{MetricStream, MetricSummary};
use messplus_core::router::{DeferredLabels, EventLabels, LabelSource, RouterSnapshot, RouterState};
use messplus_core::{RequestEvent, RequestInput, RoutingDecision, VirtualQueue};

use crate::config::{FeedbackMode, TenantConfig};
use crate::error::ServiceError;
use crate::log::{EventLog, LogEvent};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;
const CHECKPOINT_FILE: &str = "checkpoint.json";

/// Contents of a tenant checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub tenant: String,
    /// Number of log records already folded into this state.
    pub log_offset: u64,
    pub router: RouterSnapshot,
    pub metrics: MetricStream,
}

/// Result of applying one event.
#[derive(Debug, Clone)]
pub enum Applied {
    Routed(RoutingDecision),
    Feedback(VirtualQueue),
}

/// Read-only copy of a tenant's state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantView {
    pub tenant: String,
    pub log_offset: u64,
    pub router: RouterSnapshot,
}

struct Inner {
    router: RouterState,
    metrics: MetricStream,
    log: EventLog,
    /// Set when a log append failed after the router already moved on.
    poisoned: bool,
}

pub struct Tenant {
    config: TenantConfig,
    dir: PathBuf,
    inner: Mutex<Inner>,
}

/// Applies `event` to the router and metrics. Shared by the live path and
/// replay.
pub fn apply(
    mode: FeedbackMode,
    shadow_exploration: bool,
    router: &mut RouterState,
    metrics: &mut MetricStream,
    event: &LogEvent,
) -> Result<Applied, ServiceError> {
    match event {
        LogEvent::Route {
            t,
            token_count,
            input,
            labels,
        } => {
            let request = RequestEvent {
                t: *t,
                token_count: *token_count,
                input: input.clone(),
                labels: labels.clone(),
                costs: None,
            };
            let mut trace_labels = EventLabels;
            let mut deferred = DeferredLabels { shadow_exploration };
            let source: &mut dyn LabelSource = match mode {
                FeedbackMode::Trace => &mut trace_labels,
                FeedbackMode::Deferred => &mut deferred,
            };
            let decision = router.step(&request, source)?;
            metrics.update(&decision)?;
            Ok(Applied::Routed(decision))
        }
        LogEvent::Feedback {
            decision_id,
            satisfied,
        } => {
            let queue = router.apply_feedback(*decision_id, *satisfied)?;
            metrics.record_feedback(*satisfied);
            Ok(Applied::Feedback(queue))
        }
        LogEvent::Labels {
            decision_id,
            labels,
        } => {
            let chosen = router
                .pending()
                .find(|p| p.t == *decision_id)
                .map(|p| p.chosen);
            let queue = router.apply_full_feedback(*decision_id, labels)?;
            if let Some(c) = chosen {
                metrics.record_feedback(labels[c.0]);
            }
            Ok(Applied::Feedback(queue))
        }
    }
}

impl Tenant {
    /// Opens the tenant under `data_dir/tenants/<id>`, loading its checkpoint
    /// and replaying the log tail.
    pub fn open(config: TenantConfig, data_dir: &Path, segment_records: u64) -> Result<Self, ServiceError> {
        let dir = data_dir.join("tenants").join(&config.id);
        fs::create_dir_all(&dir)?;
        let router_config = config.router_config()?;

        let (mut router, mut metrics, offset) = match read_checkpoint(&dir.join(CHECKPOINT_FILE))? {
            Some(cp) => {
                if cp.tenant != config.id {
                    return Err(ServiceError::Checkpoint(format!(
                        "checkpoint belongs to tenant {}, not {}",
                        cp.tenant, config.id
                    )));
                }
                if cp.router.config != router_config {
                    return Err(ServiceError::Checkpoint(format!(
                        "tenant {} configuration differs from its checkpoint",
                        config.id
                    )));
                }
                (RouterState::from_snapshot(cp.router)?, cp.metrics, cp.log_offset)
            }
            None => {
                let models = router_config.zoo.len();
                (RouterState::new(router_config)?, MetricStream::new(models), 0)
            }
        };

        let (log, recovery) = EventLog::open(&dir.join("log"), segment_records, offset)?;
        if recovery.truncated_bytes > 0 {
            tracing::warn!(
                tenant = %config.id,
                bytes = recovery.truncated_bytes,
                "cut torn record from event log tail"
            );
        }
        for (i, event) in recovery.events.iter().enumerate() {
            apply(config.mode, config.shadow_exploration, &mut router, &mut metrics, event).map_err(|e| {
                ServiceError::CorruptLog {
                    path: log.dir().to_path_buf(),
                    msg: format!("record {} does not replay: {e}", offset + i as u64),
                }
            })?;
        }
        tracing::info!(tenant = %config.id, offset = log.offset(), t = router.t, "tenant ready");

        Ok(Self {
            config,
            dir,
            inner: Mutex::new(Inner {
                router,
                metrics,
                log,
                poisoned: false,
            }),
        })
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn config(&self) -> &TenantConfig {
        &self.config
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // A panic while holding the lock leaves state we can no longer trust.
        self.inner.lock().unwrap_or_else(|e| {
            let mut g = e.into_inner();
            g.poisoned = true;
            g
        })
    }

    /// Builds an event from the next request index, applies it and logs it,
    /// all under one lock.
    fn write(&self, make: impl FnOnce(u64) -> LogEvent) -> Result<Applied, ServiceError> {
        let mut guard = self.lock();
        let inner = &mut *guard;
        if inner.poisoned {
            return Err(ServiceError::Unavailable(self.config.id.clone()));
        }
        let event = make(inner.router.t);
        let applied = apply(
            self.config.mode,
            self.config.shadow_exploration,
            &mut inner.router,
            &mut inner.metrics,
            &event,
        )?;
        if let Err(e) = inner.log.append(&event) {
            inner.poisoned = true;
            tracing::error!(tenant = %self.config.id, error = %e, "event log append failed");
            return Err(ServiceError::Unavailable(self.config.id.clone()));
        }
        Ok(applied)
    }

    /// Routes one request as the tenant's next request index.
    pub fn route(
        &self,
        input: RequestInput,
        token_count: u64,
        labels: Option<Vec<bool>>,
    ) -> Result<RoutingDecision, ServiceError> {
        match (self.config.mode, &labels) {
            (FeedbackMode::Trace, None) => return Err(ServiceError::LabelsRequired(self.config.id.clone())),
            (FeedbackMode::Deferred, Some(_)) => {
                return Err(ServiceError::BadRequest(
                    "labels are only accepted by trace-mode tenants".into(),
                ))
            }
            _ => {}
        }
        let applied = self.write(|t| LogEvent::Route {
            t,
            token_count,
            input,
            labels,
        })?;
        match applied {
            Applied::Routed(d) => Ok(d),
            Applied::Feedback(_) => unreachable!("route event yields a decision"),
        }
    }

    pub fn feedback(&self, decision_id: u64, satisfied: bool) -> Result<VirtualQueue, ServiceError> {
        match self.write(|_| LogEvent::Feedback {
            decision_id,
            satisfied,
        })? {
            Applied::Feedback(q) => Ok(q),
            Applied::Routed(_) => unreachable!("feedback event yields a queue"),
        }
    }

    pub fn labels(&self, decision_id: u64, labels: Vec<bool>) -> Result<VirtualQueue, ServiceError> {
        match self.write(|_| LogEvent::Labels { decision_id, labels })? {
            Applied::Feedback(q) => Ok(q),
            Applied::Routed(_) => unreachable!("labels event yields a queue"),
        }
    }

    pub fn view(&self) -> TenantView {
        let inner = self.lock();
        TenantView {
            tenant: self.config.id.clone(),
            log_offset: inner.log.offset(),
            router: inner.router.snapshot(),
        }
    }

    pub fn summary(&self) -> MetricSummary {
        self.lock().metrics.summary()
    }

    /// Writes the current state to the checkpoint file atomically.
    pub fn checkpoint(&self) -> Result<Checkpoint, ServiceError> {
        let inner = self.lock();
        if inner.poisoned {
            return Err(ServiceError::Unavailable(self.config.id.clone()));
        }
        let cp = Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            tenant: self.config.id.clone(),
            log_offset: inner.log.offset(),
            router: inner.router.snapshot(),
            metrics: inner.metrics.clone(),
        };
        write_checkpoint(&self.dir, &cp)?;
        Ok(cp)
    }
}

fn read_checkpoint(path: &Path) -> Result<Option<Checkpoint>, ServiceError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let cp: Checkpoint = serde_json::from_slice(&bytes)
        .map_err(|e| ServiceError::Checkpoint(format!("{}: {e}", path.display())))?;
    if cp.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(ServiceError::Checkpoint(format!(
            "{}: unsupported schema_version {}",
            path.display(),
            cp.schema_version
        )));
    }
    Ok(Some(cp))
}

fn write_checkpoint(dir: &Path, cp: &Checkpoint) -> Result<(), ServiceError> {
    let json = serde_json::to_vec(cp).map_err(|e| ServiceError::Checkpoint(e.to_string()))?;
    let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&json)?;
    f.sync_all()?;
    fs::rename(&tmp, dir.join(CHECKPOINT_FILE))?;
    fs::File::open(dir)?.sync_all()?;
    Ok(())
}
