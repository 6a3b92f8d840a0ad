mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::{count_after, service};
use otforge_annotation::http::router;
use otforge_core::ot::format::to_value;
use otforge_testkit::trees;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(Arc::new(service().0))
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX)
        .await
        .unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn create(app: &Router, trees: &[otforge_core::OperationTree]) -> Vec<i64> {
    let body = json!({ "trees": trees.iter().map(to_value).collect::<Vec<_>>() });
    let (status, v) = send(app, "POST", "/tasks", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    serde_json::from_value(v["task_ids"].clone()).unwrap()
}

#[tokio::test]
async fn health() {
    let (status, v) = send(&app(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, "ok");
}

#[tokio::test]
async fn full_round_trip() {
    let app = app();
    let ids = create(&app, &[trees::notebook_cast()]).await;
    let id = ids[0];

    let (status, v) = send(&app, "GET", "/tasks/next?phase=phase1&annotator=ann", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["task"]["task_id"], id);
    assert_eq!(v["node_order"][0]["node_path"], "/");

    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{id}/question"),
        Some(json!({"annotator": "ann", "question": "Who starred in 'The Notebook'?"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["phase"], "Phase2Pending");

    let (status, _) = send(&app, "GET", "/tasks/next?phase=phase2&annotator=ann", None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = send(&app, "GET", "/tasks/next?phase=phase2&annotator=bob", None).await;
    assert_eq!(status, StatusCode::OK);

    let (status, v) = send(&app, "GET", &format!("/tasks/{id}/prematch"), None).await;
    assert_eq!(status, StatusCode::OK);
    let suggestions = v["suggestions"].clone();
    assert_eq!(suggestions.as_array().unwrap().len(), 1);

    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{id}/tokens"),
        Some(json!({"annotator": "bob", "assignments": suggestions})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["phase"], "Phase2Done");

    let (status, v) = send(&app, "GET", "/export", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    assert_eq!(v["report"]["query_count"], 1);
}

#[tokio::test]
async fn idempotency_key_from_header() {
    let app = app();
    let body = json!({ "trees": [to_value(&trees::notebook_cast())] });
    let req = |b: &Value| {
        Request::builder()
            .method("POST")
            .uri("/tasks")
            .header("content-type", "application/json")
            .header("idempotency-key", "k1")
            .body(Body::from(b.to_string()))
            .unwrap()
    };
    let first = app.clone().oneshot(req(&body)).await.unwrap();
    let second = app.clone().oneshot(req(&body)).await.unwrap();
    assert_eq!(first.status(), StatusCode::CREATED);
    assert_eq!(second.status(), StatusCode::CREATED);
    let other = json!({ "trees": [to_value(&count_after(1999))] });
    let third = app.clone().oneshot(req(&other)).await.unwrap();
    assert_eq!(third.status(), StatusCode::CONFLICT);
}

#[tokio::test]
async fn errors_carry_codes() {
    let app = app();
    let (status, v) = send(&app, "GET", "/tasks/77", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not_found");

    let (status, v) = send(
        &app,
        "POST",
        "/tasks",
        Some(json!({"trees": [{"op": "Nope"}]})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["error"], "invalid_tree");

    let id = create(&app, &[trees::jesse_vote()]).await[0];
    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{id}/question"),
        Some(json!({"annotator": "ann", "question": "x"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT, "{v}");
    assert!(v["message"].is_string());

    send(&app, "GET", "/tasks/next?phase=phase1&annotator=ann", None).await;
    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{id}/adapt"),
        Some(json!({"annotator": "ann", "edits": [{"node_path": "/0/0/1", "value": 2100}]})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert_eq!(v["error"], "empty_result");

    let (status, _) = send(&app, "GET", "/tasks/next?phase=phase9&annotator=ann", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, v) = send(&app, "GET", "/export?phase=phase2_pending", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn adapt_and_skip() {
    let app = app();
    let ids = create(&app, &[count_after(2000), count_after(1990)]).await;
    send(&app, "GET", "/tasks/next?phase=phase1&annotator=ann", None).await;
    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{}/adapt", ids[0]),
        Some(json!({"annotator": "ann", "edits": [{"node_path": "/0", "comparator": ">=", "value": 2005}]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["tree"]["children"][0]["args"]["value"], 2005);

    send(&app, "GET", "/tasks/next?phase=phase1&annotator=bob", None).await;
    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{}/skip", ids[1]),
        Some(json!({"annotator": "bob", "reason": "nonsensical"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["phase"], "Skipped");
    let (status, v) = send(
        &app,
        "POST",
        &format!("/tasks/{}/lease", ids[0]),
        Some(json!({"annotator": "ann"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
}
