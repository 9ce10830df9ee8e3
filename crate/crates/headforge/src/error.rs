use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use headforge_core::Error as CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    Conflict,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body returned by every endpoint and printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

fn kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::Parse { .. } => "parse",
        CoreError::InvalidMesh(_) => "invalid_mesh",
        CoreError::DimensionMismatch { .. } => "dimension_mismatch",
        CoreError::TopologyMismatch(_) => "topology_mismatch",
        CoreError::Degenerate(_) => "degenerate",
        CoreError::KeepExceedsRank { .. } => "keep_exceeds_rank",
        CoreError::EmptyCohort(_) => "empty_cohort",
        CoreError::UnknownCohort(_) => "unknown_cohort",
        CoreError::EmptyRegion(_) => "empty_region",
        CoreError::OutOfRange(_) => "out_of_range",
        CoreError::TooFewSamples { .. } => "too_few_samples",
        CoreError::InvalidNeighborhood { .. } => "invalid_neighborhood",
        CoreError::ModelFile(_) => "model_file",
        CoreError::Image(_) => "image",
        CoreError::Json(_) => "json",
        CoreError::Io(_) => "io",
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Io(_) | CoreError::ModelFile(_) => ErrorCode::Internal,
            _ => ErrorCode::BadRequest,
        };
        let detail = serde_json::json!({ "kind": kind(&e) });
        ApiError::new(code, e.to_string()).with_detail(detail)
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
