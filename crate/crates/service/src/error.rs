//! Error envelope for HTTP responses.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ontokms_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorCode {
    NotFound,
    Conflict,
    Cycle,
    Parse,
    Validation,
    Io,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict | ErrorCode::Cycle => StatusCode::CONFLICT,
            ErrorCode::Parse | ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Io => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: ErrorCode::Validation, message: message.into(), detail: None }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NotFound(_) => Self { code: ErrorCode::NotFound, message, detail: None },
            Error::Conflict(_) => Self { code: ErrorCode::Conflict, message, detail: None },
            Error::Cycle(_) => Self { code: ErrorCode::Cycle, message, detail: None },
            Error::Parse(p) => Self { code: ErrorCode::Parse, message, detail: Some(json!(p)) },
            Error::Validation(_) => Self { code: ErrorCode::Validation, message, detail: None },
            Error::Io { path, .. } => Self { code: ErrorCode::Io, message, detail: Some(json!({ "path": path })) },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message, "detail": self.detail } });
        (self.code.status(), Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
