//! The error body every endpoint returns: `{code, message, detail}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use mofs_core::error::{DataError, InterpretError};
use mofs_core::store::StoreError;

/// The published set of machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    BadColumn,
    BadDataset,
    InvalidConfig,
    NotFound,
    NotReady,
    InvalidWeights,
    UnknownSolution,
    DiscardedSolution,
    Conflict,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 11] = [
        ErrorCode::BadRequest,
        ErrorCode::BadColumn,
        ErrorCode::BadDataset,
        ErrorCode::InvalidConfig,
        ErrorCode::NotFound,
        ErrorCode::NotReady,
        ErrorCode::InvalidWeights,
        ErrorCode::UnknownSolution,
        ErrorCode::DiscardedSolution,
        ErrorCode::Conflict,
        ErrorCode::Internal,
    ];

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::NotReady | ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
            ErrorCode::BadColumn
            | ErrorCode::BadDataset
            | ErrorCode::InvalidConfig
            | ErrorCode::InvalidWeights
            | ErrorCode::UnknownSolution
            | ErrorCode::DiscardedSolution => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default)]
    pub detail: serde_json::Value,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: serde_json::Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::Internal {
            log::error!("{}", self.message);
        }
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<DataError> for ApiError {
    fn from(e: DataError) -> Self {
        match &e {
            DataError::MissingColumn(column) => {
                ApiError::new(ErrorCode::BadColumn, e.to_string()).with_detail(serde_json::json!({ "column": column }))
            }
            _ => ApiError::new(ErrorCode::BadDataset, e.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::RunNotFound(_) | StoreError::DatasetNotFound(_) => ApiError::new(ErrorCode::NotFound, message),
            StoreError::NotReady(status) => {
                ApiError::new(ErrorCode::NotReady, message).with_detail(serde_json::json!({ "status": status }))
            }
            StoreError::UnknownSolution(id) => {
                ApiError::new(ErrorCode::UnknownSolution, message).with_detail(serde_json::json!({ "solution_id": id }))
            }
            StoreError::DiscardedSolution(id) => ApiError::new(ErrorCode::DiscardedSolution, message)
                .with_detail(serde_json::json!({ "solution_id": id })),
            StoreError::ChosenSolution(_) | StoreError::NothingLeft | StoreError::BadTransition { .. } => {
                ApiError::new(ErrorCode::Conflict, message)
            }
            StoreError::Config(_) => ApiError::new(ErrorCode::InvalidConfig, message),
            StoreError::Data(d) => d.into(),
            StoreError::Io(_) | StoreError::Corrupt(_) => ApiError::internal(message),
        }
    }
}

impl From<InterpretError> for ApiError {
    fn from(e: InterpretError) -> Self {
        match e {
            InterpretError::InvalidWeights(_) | InterpretError::AllConstant | InterpretError::TooFewSolutions { .. } => {
                ApiError::new(ErrorCode::InvalidWeights, e.to_string())
            }
            InterpretError::UnknownSolution(id) => ApiError::new(ErrorCode::UnknownSolution, e.to_string())
                .with_detail(serde_json::json!({ "solution_id": id })),
            _ => ApiError::internal(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_serialize_snake_case_with_statuses() {
        assert_eq!(serde_json::to_string(&ErrorCode::NotReady).unwrap(), "\"not_ready\"");
        assert_eq!(ErrorCode::NotReady.status(), StatusCode::CONFLICT);
        assert_eq!(ErrorCode::InvalidWeights.status(), StatusCode::UNPROCESSABLE_ENTITY);
        let missing: ApiError = DataError::MissingColumn("age".into()).into();
        assert_eq!(missing.code, ErrorCode::BadColumn);
        assert_eq!(missing.detail["column"], "age");
    }
}
