//! HTTP gateway around the router.
//!
//! Each configured tenant owns one router, an append-only event log under
//! `data_dir/tenants/<id>/log` and an optional checkpoint. Route and feedback
//! calls for a tenant are serialized; different tenants run independently.
//!
//! Endpoints (JSON, every payload carries `schema_version`):
//!
//! - `POST /v1/route` `{tenant, text | features, token_count, labels?}`
//! - `POST /v1/feedback` `{tenant, decision_id, satisfied | labels}`
//! - `GET /v1/metrics?tenant=<id>`
//! - `GET /v1/state?tenant=<id>`
//! - `POST /v1/admin/checkpoint?tenant=<id>`

pub mod api;
pub mod config;
pub mod error;
pub mod log;
pub mod tenant;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

pub use api::{router, Tenants};
pub use config::{FeedbackMode, ServiceConfig, TenantConfig};
pub use error::ServiceError;
pub use tenant::Tenant;

/// Opens every configured tenant, replaying its log.
pub fn open_tenants(config: &ServiceConfig) -> Result<Tenants, ServiceError> {
    config.validate()?;
    let mut tenants = HashMap::new();
    for tc in &config.tenants {
        let tenant = Tenant::open(tc.clone(), &config.data_dir, config.segment_records)?;
        tenants.insert(tc.id.clone(), Arc::new(tenant));
    }
    Ok(Arc::new(tenants))
}

/// Builds the application for `config`.
pub fn app(config: &ServiceConfig) -> Result<axum::Router, ServiceError> {
    Ok(router(open_tenants(config)?))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    config: &ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let app = app(config)?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, tenants = config.tenants.len(), "listening");
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let interrupt = async {
        if let Err(e) = tokio::signal::ctrl_c().await {
            tracing::error!(error = %e, "cannot listen for Ctrl-C");
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(e) => {
                tracing::error!(error = %e, "cannot listen for SIGTERM");
                std::future::pending::<()>().await;
            }
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = interrupt => {}
        _ = terminate => {}
    }
}
