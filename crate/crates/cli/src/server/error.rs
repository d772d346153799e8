use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::store::StoreError;

/// JSON error body `{code, message}` with a status derived from the code.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        "UnknownKeyError" | "UnknownDocumentError" | "UnknownSessionError" | "NotFound" => {
            StatusCode::NOT_FOUND
        }
        "SessionClosedError"
        | "NotReadyError"
        | "IndexCorpusMismatch"
        | "IndexMissing"
        | "DuplicateIdError"
        | "TemplateMismatch" => StatusCode::CONFLICT,
        "ProviderError" | "ProtocolParseError" => StatusCode::BAD_GATEWAY,
        "IoError" | "SnapshotError" | "DimensionMismatch" | "InternalError" => {
            StatusCode::INTERNAL_SERVER_ERROR
        }
        _ => StatusCode::BAD_REQUEST,
    }
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status_for(code),
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new("InternalError", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({ "code": self.code, "message": self.message }));
        (self.status, body).into_response()
    }
}

macro_rules! from_coded {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                Self::new(e.code(), e.to_string())
            }
        }
    )*};
}

from_coded!(
    tenderforge_core::Error,
    tenderforge_core::CorpusError,
    tenderforge_core::RetrievalError,
    tenderforge_core::RerankError,
    tenderforge_core::GenerationError,
    tenderforge_core::KbError,
    tenderforge_core::EvalError,
    StoreError
);

/// `Json` whose rejections are reported as [`ApiError`].
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(e) => Err(rejection(e)),
        }
    }
}

fn rejection(e: JsonRejection) -> ApiError {
    ApiError::new("SchemaError", e.body_text())
}

/// Parses an optional JSON body; an empty body gives `T::default()`.
pub fn optional_body<T: DeserializeOwned + Default>(bytes: &[u8]) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::new("SchemaError", e.to_string()))
}
