use std::sync::Arc;
use std::time::{Duration, Instant};

use arena_core::CrsDescriptor;
use reqwest::header::CONTENT_TYPE;
use thiserror::Error;

use crate::catalog::Catalog;
use crate::protocol::{CrsReply, CrsRequest, CrsResponse};
use crate::stub::{self, StubKind};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("{crs} did not answer within {timeout:?}")]
    Timeout { crs: String, timeout: Duration },
    #[error("{crs} is unavailable: {reason}")]
    BackendUnavailable { crs: String, reason: String },
    #[error("{crs} sent a malformed reply: {reason}")]
    Protocol { crs: String, reason: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Routes requests to stub or HTTP backends. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Gateway {
    http: reqwest::Client,
    catalog: Arc<Catalog>,
}

impl Default for Gateway {
    fn default() -> Self {
        Self::new()
    }
}

impl Gateway {
    pub fn new() -> Self {
        Self::with_catalog(Catalog::bundled().clone())
    }

    pub fn with_catalog(catalog: Catalog) -> Self {
        Self { http: reqwest::Client::new(), catalog: Arc::new(catalog) }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Asks `crs` for its next utterance. Never waits longer than `timeout`.
    pub async fn respond(
        &self,
        crs: &CrsDescriptor,
        request: &CrsRequest,
        timeout: Duration,
    ) -> Result<CrsResponse, GatewayError> {
        if !request.is_valid() {
            return Err(GatewayError::InvalidRequest(
                "context must end with a user utterance".into(),
            ));
        }
        let started = Instant::now();
        let raw = match crs.stub_kind() {
            Some(kind) => {
                let kind: StubKind = kind.parse().map_err(|reason| GatewayError::BackendUnavailable {
                    crs: crs.crs_id.to_string(),
                    reason,
                })?;
                stub::respond(kind, &self.catalog, request)
            }
            None => tokio::time::timeout(timeout, self.call_http(crs, request))
                .await
                .map_err(|_| GatewayError::Timeout { crs: crs.crs_id.to_string(), timeout })??,
        };
        let response = raw.trim_end().to_owned();
        if response.trim().is_empty() {
            return Err(GatewayError::Protocol {
                crs: crs.crs_id.to_string(),
                reason: "empty response".into(),
            });
        }
        Ok(CrsResponse { response, latency_ms: started.elapsed().as_millis() as u64 })
    }

    async fn call_http(&self, crs: &CrsDescriptor, request: &CrsRequest) -> Result<String, GatewayError> {
        let crs_name = || crs.crs_id.to_string();
        let url = format!("{}/respond", crs.endpoint.trim_end_matches('/'));
        let body = serde_json::to_vec(request).expect("request serializes");
        let reply = self
            .http
            .post(&url)
            .header(CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .await
            .map_err(|e| GatewayError::BackendUnavailable { crs: crs_name(), reason: e.to_string() })?;
        let status = reply.status();
        if !status.is_success() {
            return Err(GatewayError::BackendUnavailable {
                crs: crs_name(),
                reason: format!("HTTP {status}"),
            });
        }
        let bytes = reply
            .bytes()
            .await
            .map_err(|e| GatewayError::BackendUnavailable { crs: crs_name(), reason: e.to_string() })?;
        let parsed: CrsReply = serde_json::from_slice(&bytes)
            .map_err(|e| GatewayError::Protocol { crs: crs_name(), reason: e.to_string() })?;
        Ok(parsed.response)
    }
}
