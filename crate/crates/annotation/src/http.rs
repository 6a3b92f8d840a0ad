//! JSON-over-HTTP front of [`Service`]. Handlers hold no state of their
//! own; every call is one blocking service call on the tokio blocking pool.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use otforge_core::ot::format::{from_value, literal_from_value};
use otforge_core::{Comparator, NodePath, OperationTree};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::ServiceError;
use crate::model::{Phase, SkipReason, TokenAssignment};
use crate::service::{ConstraintEdit, Service};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        use ServiceError as E;
        let status = match &e {
            E::NotFound(_) => StatusCode::NOT_FOUND,
            E::IdempotencyConflict(_)
            | E::NotLeased { .. }
            | E::LeaseExpired(_)
            | E::WrongPhase { .. }
            | E::SameAnnotator
            | E::Conflict(_)
            | E::IllegalTransition { .. } => StatusCode::CONFLICT,
            E::InvalidTree { .. }
            | E::SchemaMismatch { .. }
            | E::InvalidAdaptation(_)
            | E::EmptyResult
            | E::Execution(_) => StatusCode::UNPROCESSABLE_ENTITY,
            E::MissingAnnotator
            | E::NotAQueue(_)
            | E::NotExportable(_)
            | E::StructuralEdit(_)
            | E::EmptyQuestion
            | E::TokenOutOfRange { .. }
            | E::UnknownNodePath(_) => StatusCode::BAD_REQUEST,
            E::Corrupt(_) | E::Store(_) | E::Database(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.code, "message": self.message})),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn call<T, F>(service: Arc<Service>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&service))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: e.to_string(),
        })?
        .map_err(ApiError::from)
}

fn tree_from(value: &Value, index: usize) -> ApiResult<OperationTree> {
    from_value(value).map_err(|e| ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        code: "invalid_tree",
        message: format!("tree {index}: {e}"),
    })
}

#[derive(Deserialize)]
struct CreateBody {
    trees: Vec<Value>,
    idempotency_key: Option<String>,
}

async fn create_tasks(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    Json(body): Json<CreateBody>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let trees = body
        .trees
        .iter()
        .enumerate()
        .map(|(i, v)| tree_from(v, i))
        .collect::<ApiResult<Vec<_>>>()?;
    let key = body.idempotency_key.or_else(|| {
        headers
            .get("idempotency-key")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string)
    });
    let ids = call(svc, move |s| s.create_tasks(&trees, key.as_deref())).await?;
    Ok((StatusCode::CREATED, Json(json!({ "task_ids": ids }))))
}

#[derive(Deserialize)]
struct NextQuery {
    phase: String,
    annotator: String,
}

async fn next_task(
    State(svc): State<Arc<Service>>,
    Query(q): Query<NextQuery>,
) -> ApiResult<Response> {
    let phase: Phase = q.phase.parse().map_err(ApiError::bad_request)?;
    let task = call(svc.clone(), move |s| s.next_task(&q.annotator, phase)).await?;
    match task {
        None => Ok(StatusCode::NO_CONTENT.into_response()),
        Some(t) => {
            let detail = call(svc, move |s| s.task_detail(t.task_id)).await?;
            Ok(Json(detail).into_response())
        }
    }
}

async fn task_detail(State(svc): State<Arc<Service>>, Path(id): Path<i64>) -> ApiResult<Response> {
    let detail = call(svc, move |s| s.task_detail(id)).await?;
    Ok(Json(detail).into_response())
}

#[derive(Deserialize)]
struct AnnotatorBody {
    annotator: String,
}

async fn renew_lease(
    State(svc): State<Arc<Service>>,
    Path(id): Path<i64>,
    Json(body): Json<AnnotatorBody>,
) -> ApiResult<Response> {
    let task = call(svc, move |s| s.renew_lease(id, &body.annotator)).await?;
    Ok(Json(task).into_response())
}

#[derive(Deserialize)]
struct QuestionBody {
    annotator: String,
    question: String,
}

async fn submit_question(
    State(svc): State<Arc<Service>>,
    Path(id): Path<i64>,
    Json(body): Json<QuestionBody>,
) -> ApiResult<Response> {
    let task = call(svc, move |s| {
        s.submit_question(id, &body.annotator, &body.question)
    })
    .await?;
    Ok(Json(task).into_response())
}

#[derive(Deserialize)]
struct EditBody {
    node_path: String,
    comparator: Option<String>,
    value: Option<Value>,
}

#[derive(Deserialize)]
struct AdaptBody {
    annotator: String,
    #[serde(default)]
    edits: Vec<EditBody>,
    tree: Option<Value>,
}

fn edit_from(e: &EditBody) -> ApiResult<ConstraintEdit> {
    Ok(ConstraintEdit {
        node_path: e
            .node_path
            .parse::<NodePath>()
            .map_err(ApiError::bad_request)?,
        comparator: e
            .comparator
            .as_deref()
            .map(str::parse::<Comparator>)
            .transpose()
            .map_err(|e| ApiError::bad_request(e.to_string()))?,
        value: e
            .value
            .as_ref()
            .map(|v| literal_from_value(v, "value"))
            .transpose()
            .map_err(|e| ApiError::bad_request(e.to_string()))?,
    })
}

async fn adapt(
    State(svc): State<Arc<Service>>,
    Path(id): Path<i64>,
    Json(body): Json<AdaptBody>,
) -> ApiResult<Response> {
    let task = match &body.tree {
        Some(v) => {
            let proposed = tree_from(v, 0)?;
            call(svc, move |s| {
                s.adapt_to_tree(id, &body.annotator, &proposed)
            })
            .await?
        }
        None => {
            let edits = body
                .edits
                .iter()
                .map(edit_from)
                .collect::<ApiResult<Vec<_>>>()?;
            call(svc, move |s| {
                s.adapt_constraints(id, &body.annotator, &edits)
            })
            .await?
        }
    };
    Ok(Json(task).into_response())
}

#[derive(Deserialize)]
struct SkipBody {
    annotator: String,
    reason: SkipReason,
    note: Option<String>,
}

async fn skip(
    State(svc): State<Arc<Service>>,
    Path(id): Path<i64>,
    Json(body): Json<SkipBody>,
) -> ApiResult<Response> {
    let task = call(svc, move |s| {
        s.skip_task(id, &body.annotator, body.reason, body.note)
    })
    .await?;
    Ok(Json(task).into_response())
}

async fn prematch(State(svc): State<Arc<Service>>, Path(id): Path<i64>) -> ApiResult<Response> {
    let suggestions = call(svc, move |s| s.prematch(id)).await?;
    Ok(Json(json!({ "suggestions": suggestions })).into_response())
}

#[derive(Deserialize)]
struct TokensBody {
    annotator: String,
    question: Option<String>,
    #[serde(default)]
    assignments: Vec<TokenAssignment>,
}

async fn submit_tokens(
    State(svc): State<Arc<Service>>,
    Path(id): Path<i64>,
    Json(body): Json<TokensBody>,
) -> ApiResult<Response> {
    let task = call(svc, move |s| {
        s.submit_tokens(
            id,
            &body.annotator,
            body.question.as_deref(),
            body.assignments,
        )
    })
    .await?;
    Ok(Json(task).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    phase: Option<String>,
}

async fn export(
    State(svc): State<Arc<Service>>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let phase = q
        .phase
        .as_deref()
        .map(str::parse::<Phase>)
        .transpose()
        .map_err(ApiError::bad_request)?;
    let out = call(svc, move |s| s.export(phase)).await?;
    Ok(Json(out).into_response())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/tasks", post(create_tasks))
        .route("/tasks/next", get(next_task))
        .route("/tasks/{id}", get(task_detail))
        .route("/tasks/{id}/lease", post(renew_lease))
        .route("/tasks/{id}/question", post(submit_question))
        .route("/tasks/{id}/adapt", post(adapt))
        .route("/tasks/{id}/skip", post(skip))
        .route("/tasks/{id}/prematch", get(prematch))
        .route("/tasks/{id}/tokens", post(submit_tokens))
        .route("/export", get(export))
        .with_state(service)
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}
