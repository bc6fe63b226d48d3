//! HTTP routes. Bodies are parsed by hand so malformed JSON maps to 400.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use messplus_core::metrics::MetricSummary;
use messplus_core::{Error as CoreError, RequestInput};

use crate::error::ServiceError;
use crate::tenant::{Tenant, TenantView};

pub const API_SCHEMA_VERSION: u32 = 1;

/// Tenants by id. Built once at startup; tenants never come and go.
pub type Tenants = Arc<HashMap<String, Arc<Tenant>>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteRequest {
    tenant: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    features: Option<Vec<f64>>,
    #[serde(default)]
    token_count: u64,
    /// Trace-mode tenants only.
    #[serde(default)]
    labels: Option<Vec<bool>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RouteResponse {
    pub schema_version: u32,
    pub tenant: String,
    pub decision_id: u64,
    pub model: usize,
    pub model_name: String,
    pub explored: bool,
    pub s_hat: Vec<f64>,
    pub queue: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackRequest {
    tenant: String,
    decision_id: u64,
    #[serde(default)]
    satisfied: Option<bool>,
    #[serde(default)]
    labels: Option<Vec<bool>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub schema_version: u32,
    pub tenant: String,
    pub decision_id: u64,
    pub queue: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub schema_version: u32,
    pub tenant: String,
    pub summary: MetricSummary,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateResponse {
    pub schema_version: u32,
    pub q: f64,
    pub t: u64,
    #[serde(flatten)]
    pub view: TenantView,
}

#[derive(Debug, Deserialize)]
struct TenantQuery {
    tenant: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointResponse {
    pub schema_version: u32,
    pub tenant: String,
    pub log_offset: u64,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownTenant(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::LabelsRequired(_) => StatusCode::CONFLICT,
            ServiceError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Core(e) => match e {
                CoreError::UnknownDecision(_) => StatusCode::NOT_FOUND,
                CoreError::FeedbackOutOfOrder { .. }
                | CoreError::DuplicateFeedback(_)
                | CoreError::LabelsRequired(_) => StatusCode::CONFLICT,
                CoreError::Parameter(_)
                | CoreError::Dimension { .. }
                | CoreError::NonFinite(_)
                | CoreError::MissingLabel { .. } => StatusCode::BAD_REQUEST,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = json!({ "schema_version": API_SCHEMA_VERSION, "error": self.to_string() });
        (status, Json(body)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

fn tenant(tenants: &Tenants, id: &str) -> Result<Arc<Tenant>, ServiceError> {
    tenants
        .get(id)
        .cloned()
        .ok_or_else(|| ServiceError::UnknownTenant(id.to_string()))
}

/// Runs blocking tenant work (locking, fsync) off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e.to_string())))?
}

async fn route(State(tenants): State<Tenants>, body: Bytes) -> Result<Json<RouteResponse>, ServiceError> {
    let req: RouteRequest = parse(&body)?;
    let input = match (req.text, req.features) {
        (Some(text), None) => RequestInput::Text(text),
        (None, Some(x)) => RequestInput::Features(x),
        _ => {
            return Err(ServiceError::BadRequest(
                "exactly one of text and features is required".into(),
            ))
        }
    };
    let t = tenant(&tenants, &req.tenant)?;
    let labels = req.labels;
    let token_count = req.token_count;
    let (t, decision) = blocking(move || {
        let d = t.route(input, token_count, labels)?;
        Ok((t, d))
    })
    .await?;
    let model_name = t.config().models[decision.chosen.0].name.clone();
    Ok(Json(RouteResponse {
        schema_version: API_SCHEMA_VERSION,
        tenant: req.tenant,
        decision_id: decision.t,
        model: decision.chosen.0,
        model_name,
        explored: decision.explored,
        s_hat: decision.s_hat,
        queue: decision.queue_after,
    }))
}

async fn feedback(State(tenants): State<Tenants>, body: Bytes) -> Result<Json<FeedbackResponse>, ServiceError> {
    let req: FeedbackRequest = parse(&body)?;
    let t = tenant(&tenants, &req.tenant)?;
    let id = req.decision_id;
    let queue = match (req.satisfied, req.labels) {
        (Some(s), None) => blocking(move || t.feedback(id, s)).await?,
        (None, Some(labels)) => blocking(move || t.labels(id, labels)).await?,
        _ => {
            return Err(ServiceError::BadRequest(
                "exactly one of satisfied and labels is required".into(),
            ))
        }
    };
    Ok(Json(FeedbackResponse {
        schema_version: API_SCHEMA_VERSION,
        tenant: req.tenant,
        decision_id: id,
        queue: queue.q,
    }))
}

async fn metrics(
    State(tenants): State<Tenants>,
    q: Result<Query<TenantQuery>, QueryRejection>,
) -> Result<Json<MetricsResponse>, ServiceError> {
    let Query(q) = q.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let t = tenant(&tenants, &q.tenant)?;
    let summary = blocking(move || Ok(t.summary())).await?;
    Ok(Json(MetricsResponse {
        schema_version: API_SCHEMA_VERSION,
        tenant: q.tenant,
        summary,
    }))
}

async fn state(
    State(tenants): State<Tenants>,
    q: Result<Query<TenantQuery>, QueryRejection>,
) -> Result<Json<StateResponse>, ServiceError> {
    let Query(q) = q.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let t = tenant(&tenants, &q.tenant)?;
    let view = blocking(move || Ok(t.view())).await?;
    Ok(Json(StateResponse {
        schema_version: API_SCHEMA_VERSION,
        q: view.router.queue.q,
        t: view.router.t,
        view,
    }))
}

async fn checkpoint(
    State(tenants): State<Tenants>,
    q: Result<Query<TenantQuery>, QueryRejection>,
) -> Result<Json<CheckpointResponse>, ServiceError> {
    let Query(q) = q.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let t = tenant(&tenants, &q.tenant)?;
    let cp = blocking(move || t.checkpoint()).await?;
    Ok(Json(CheckpointResponse {
        schema_version: API_SCHEMA_VERSION,
        tenant: cp.tenant,
        log_offset: cp.log_offset,
    }))
}

pub fn router(tenants: Tenants) -> Router {
    Router::new()
        .route("/v1/route", post(route))
        .route("/v1/feedback", post(feedback))
        .route("/v1/metrics", get(metrics))
        .route("/v1/state", get(state))
        .route("/v1/admin/checkpoint", post(checkpoint))
        .with_state(tenants)
}
