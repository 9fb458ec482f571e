//! Crate-wide error type for pipeline operations.

use thiserror::Error;

use crate::graph::GraphError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{backend} backend unavailable: {detail}")]
    BackendUnavailable { backend: String, detail: String },
    #[error("malformed backend response: {detail}")]
    MalformedResponse { detail: String },
    #[error("cache miss for digest {digest}")]
    CacheMiss { digest: String },
    #[error("{backend} script exhausted: no entry matches {detail}")]
    ScriptExhausted { backend: String, detail: String },
    #[error("invalid request: {detail}")]
    InvalidRequest { detail: String },
    #[error("config field `{field}` invalid: {detail}")]
    Config { field: String, detail: String },
    #[error("planning failed: {detail}")]
    PlanningFailed { detail: String },
    #[error("scorer failed: {detail}")]
    ScorerFailed { detail: String },
    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },
    #[error("node {node} has unresolved dependencies: {detail}")]
    DependencyUnresolved { node: String, detail: String },
    #[error("compiler toolchain error: {detail}")]
    Toolchain { detail: String },
    #[error("compiler timed out after {seconds} s")]
    Timeout { seconds: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn backend_unavailable(backend: &str, detail: impl Into<String>) -> Self {
        Error::BackendUnavailable {
            backend: backend.to_string(),
            detail: detail.into(),
        }
    }

    pub fn malformed(detail: impl Into<String>) -> Self {
        Error::MalformedResponse {
            detail: detail.into(),
        }
    }

    pub fn config(field: &str, detail: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            detail: detail.into(),
        }
    }

    pub fn parse(what: &str, detail: impl Into<String>) -> Self {
        Error::Parse {
            what: what.to_string(),
            detail: detail.into(),
        }
    }
}
