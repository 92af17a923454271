use axum::extract::multipart::MultipartError;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use videomap_core::Error;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    /// Engine error name, or one of `BadRequest`, `NotFound`, `JobNotFound`,
    /// `Timeout`, `Internal`.
    pub code: String,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_owned(),
            message: message.into(),
            http_status: status.as_u16(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", message)
    }

    pub fn timeout() -> Self {
        Self::new(StatusCode::GATEWAY_TIMEOUT, "Timeout", "request timed out; work was cancelled")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

/// HTTP status for an engine error.
pub fn status_of(err: &Error) -> StatusCode {
    use Error::*;
    match err {
        LensNotFound(_) | FrameNotFound { .. } | UnknownVideo(_) | LandmarkNotFound(_) => StatusCode::NOT_FOUND,
        ProviderUnavailable(_) | ModelAssetMissing(_) | DimensionMismatch { .. } => StatusCode::SERVICE_UNAVAILABLE,
        Cancelled => StatusCode::GATEWAY_TIMEOUT,
        ProjectLocked(_) => StatusCode::CONFLICT,
        UndecodableFile { .. }
        | ZeroDurationVideo(_)
        | DuplicatePath(_)
        | EmptyImage
        | NonColorImage(_)
        | TextNotSupported(_)
        | EmptyPrompt
        | UndecodableImage(_)
        | NonFiniteInput
        | PerplexityInfeasible { .. }
        | EmptyInput
        | MissingVectors { .. }
        | TooFewVideos(_)
        | TooManyVideos(_)
        | MissingStreet(..)
        | DuplicateVideo(_)
        | MoreSentencesThanVideos { .. }
        | TooFewPoints { .. }
        | CurveTooShort
        | EmptySelection
        | UnsupportedVersion(_)
        | InvalidArgument(_) => StatusCode::UNPROCESSABLE_ENTITY,
        MediaTool(_) | CorruptManifest(_) | MagicMismatch(_) | TruncatedSidecar(_) | Io(_) => {
            StatusCode::INTERNAL_SERVER_ERROR
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        ApiError::new(status_of(&err), err.code(), err.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        crate::json(status, &self)
    }
}
