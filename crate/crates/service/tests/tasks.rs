mod common;

use axum::body::Body;
use axum::http::{Method, StatusCode};
use common::*;
use optimshare_service::store::{now, Store, TaskRecord, TaskState};
use optimshare_service::{router, AppState};

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn upload_errors_report_the_row() {
    let h = harness();
    let r = call(&h.app, Method::POST, "/datasets", Some(CURATOR), "a,b\n1,2\n3\n").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let msg = r.json()["error"].as_str().unwrap().to_string();
    assert!(msg.contains('3'), "{msg}");
    let r = call(&h.app, Method::POST, "/datasets", Some(CURATOR), "").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn task_creation_validates() {
    let h = harness();
    let app = &h.app;
    let r = call(app, Method::POST, "/tasks", Some(CURATOR), task_body("ds-999999", 0.5)).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let ds = upload(app, &small_csv()).await;
    let body = serde_json::json!({ "dataset_id": ds, "config": { "e_t": 1.01, "tn": 0, "app": "kl_generic" } }).to_string();
    let r = call(app, Method::POST, "/tasks", Some(CURATOR), body).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let fields: Vec<String> = r.json()["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap().to_string()).collect();
    assert!(fields.contains(&"e_t".to_string()) && fields.contains(&"tn".to_string()), "{fields:?}");

    let body = serde_json::json!({ "dataset_id": ds, "config": { "gq": ["nope"], "app": "kl_generic" } }).to_string();
    assert_eq!(call(app, Method::POST, "/tasks", Some(CURATOR), body).await.status, StatusCode::BAD_REQUEST);
    let body = serde_json::json!({ "dataset_id": ds }).to_string();
    let r = call(app, Method::POST, "/tasks", Some(CURATOR), body).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST, "classification default needs a label");
    assert_eq!(call(app, Method::POST, "/tasks", Some(CURATOR), "{not json").await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_lifecycle_and_idempotent_publish() {
    let h = harness();
    let app = &h.app;
    let ds = upload(app, &small_csv()).await;
    let id = create_task(app, task_body(&ds, 0.0)).await;
    let done = wait_done(app, &id).await;
    assert_eq!(done["task"]["state"], "finished");
    assert_eq!(done["task"]["outcome"], "released");
    assert_eq!(done["report"]["instances"].as_array().unwrap().len(), 3);

    let report = get(app, &format!("/tasks/{id}/report"), CURATOR).await;
    assert_eq!(report.status, StatusCode::OK);
    assert_eq!(report.json()["status"]["state"], "released");

    let path = format!("/tasks/{id}/publish");
    let a = call(app, Method::POST, &path, Some(CURATOR), Body::empty()).await;
    let b = call(app, Method::POST, &path, Some(CURATOR), Body::empty()).await;
    assert_eq!((a.status, b.status), (StatusCode::OK, StatusCode::OK));
    assert_eq!(a.json(), b.json());
    let pid = a.json()["id"].as_str().unwrap().to_string();
    assert_eq!(get(app, &format!("/tasks/{id}"), CURATOR).await.json()["task"]["state"], "published");

    let d1 = get(app, &format!("/published/{pid}/data"), DATA_USER).await.body;
    let d2 = get(app, &format!("/published/{pid}/data"), DATA_USER).await.body;
    assert_eq!(d1, d2);
    assert_eq!(
        optimshare_service::store::sha256_hex(&d1),
        a.json()["sha256"].as_str().unwrap(),
        "published bytes match their recorded hash"
    );
    assert_eq!(get(app, "/published", OPERATOR).await.json().as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn rejected_run_cannot_be_published() {
    let h = harness();
    let app = &h.app;
    let ds = upload(app, &small_csv()).await;
    let id = create_task(app, task_body(&ds, 1.0)).await;
    let done = wait_done(app, &id).await;
    assert_eq!(done["task"]["outcome"], "rejected");
    assert!(done["report"]["selection"]["best"].is_object());
    let r = call(app, Method::POST, &format!("/tasks/{id}/publish"), Some(CURATOR), Body::empty()).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn running_task_reports_progress() {
    let h = harness();
    let app = &h.app;
    let wine = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/winequality-white-synthetic.csv")).unwrap();
    let ds = upload(app, &wine).await;
    let body = serde_json::json!({
        "dataset_id": ds,
        "config": { "gq": ["free sulfur dioxide", "total sulfur dioxide"], "label": "quality", "seed": 1 }
    })
    .to_string();
    let id = create_task(app, body).await;
    let mut saw_running = false;
    for _ in 0..6000 {
        let t = get(app, &format!("/tasks/{id}"), OPERATOR).await.json();
        match t["task"]["state"].as_str().unwrap() {
            "running" => {
                if t["task"]["progress"]["stage"].is_string() {
                    saw_running = true;
                }
            }
            "finished" => break,
            "queued" => {}
            other => panic!("unexpected state {other}: {t}"),
        }
        tokio::time::sleep(std::time::Duration::from_millis(5)).await;
    }
    assert!(saw_running, "never observed a running state with progress");
    assert_eq!(wait_done(app, &id).await["task"]["state"], "finished");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn restart_marks_running_tasks_failed() {
    let dir = tempfile::tempdir().unwrap();
    {
        let (mut store, _) = Store::open(dir.path()).unwrap();
        let rec = TaskRecord {
            id: "task-000001".into(),
            dataset_id: "ds-x".into(),
            config: Default::default(),
            state: TaskState::Running,
            progress: None,
            outcome: None,
            error: None,
            report_sha256: None,
            released_sha256: None,
            published_id: None,
            created_at: now(),
            updated_at: now(),
        };
        store.index.tasks.insert(rec.id.clone(), rec);
        store.index.next_id = 1;
        store.persist().unwrap();
    }
    let state = AppState::start(dir.path(), tokens(), 1).unwrap();
    let app = router(state);
    let t = get(&app, "/tasks/task-000001", CURATOR).await.json();
    assert_eq!(t["task"]["state"], "failed");
    assert!(t["task"]["error"].as_str().unwrap().contains("restart"));
    assert!(!dir.path().join("index.json.tmp").exists());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn operator_defaults_apply_to_new_tasks() {
    let h = harness();
    let app = &h.app;
    let mut defaults = optimshare_core::pipeline::RunConfig::default();
    defaults.app = optimshare_core::pipeline::Application::KlGeneric;
    defaults.tn = 2;
    defaults.t = 1;
    let r = call(app, Method::PUT, "/config/defaults", Some(OPERATOR), serde_json::to_string(&defaults).unwrap()).await;
    assert_eq!(r.status, StatusCode::OK);
    let bad = serde_json::json!({ "c": 2.0 }).to_string();
    assert_eq!(call(app, Method::PUT, "/config/defaults", Some(OPERATOR), bad).await.status, StatusCode::BAD_REQUEST);

    let ds = upload(app, &small_csv()).await;
    let body = serde_json::json!({ "dataset_id": ds, "config": { "gq": ["zip"] } }).to_string();
    let id = create_task(app, body).await;
    let done = wait_done(app, &id).await;
    assert_eq!(done["report"]["instances"].as_array().unwrap().len(), 2);
    assert_eq!(get(app, "/synthesizers", OPERATOR).await.json(), serde_json::json!(["noisy_marginals"]));
}

#[test]
fn tokens_file_format() {
    let t = optimshare_service::Tokens::parse("# comment\nabc curator\n\nxyz data_user\n").unwrap();
    assert_eq!(t.role("abc"), Some(optimshare_service::Role::Curator));
    assert_eq!(t.role("nope"), None);
    assert!(optimshare_service::Tokens::parse("abc admin").is_err());
    assert!(optimshare_service::Tokens::parse("abc curator\nabc operator").is_err());
}
