mod common;

use axum::body::Body;
use axum::http::{Method, StatusCode};
use common::*;

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn role_matrix() {
    let h = harness();
    let failures = role_matrix_failures(&h.app).await;
    assert!(failures.is_empty(), "{failures:#?}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn data_user_never_sees_original_data() {
    let h = harness();
    let app = &h.app;
    let csv = small_csv();
    let ds = upload(app, &csv).await;
    let id = create_task(app, task_body(&ds, 0.0)).await;
    wait_done(app, &id).await;

    // Before publishing nothing about the task is visible.
    for path in [format!("/tasks/{id}"), format!("/tasks/{id}/report"), "/datasets".into()] {
        assert_eq!(get(app, &path, DATA_USER).await.status, StatusCode::FORBIDDEN, "{path}");
    }
    assert_eq!(get(app, "/published", DATA_USER).await.json(), serde_json::json!([]));

    let r = call(app, Method::POST, &format!("/tasks/{id}/publish"), Some(CURATOR), Body::empty()).await;
    let pid = r.json()["id"].as_str().unwrap().to_string();
    let catalog = get(app, "/published", DATA_USER).await.json();
    assert_eq!(catalog.as_array().unwrap().len(), 1);
    assert!(catalog[0]["effectiveness"].is_number());
    let first = get(app, &format!("/published/{pid}/data"), DATA_USER).await;
    assert_eq!(first.status, StatusCode::OK);
    assert_ne!(first.body, csv.as_bytes());
    let sha = first.headers["x-content-sha256"].to_str().unwrap().to_string();
    assert_eq!(sha, optimshare_service::store::sha256_hex(&first.body));

    let t = get(app, &format!("/tasks/{id}"), DATA_USER).await.json();
    assert!(t["task"].get("config").is_none() && t.get("report").is_none());
    let body = String::from_utf8(get(app, &format!("/tasks/{id}"), DATA_USER).await.body).unwrap();
    assert!(!body.contains("dataset_id"));
}
