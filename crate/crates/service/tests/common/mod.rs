#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use optimshare_service::{router, AppState, Role, Tokens};
use serde_json::Value;
use tower::ServiceExt;

pub const CURATOR: &str = "tok-curator";
pub const OPERATOR: &str = "tok-operator";
pub const DATA_USER: &str = "tok-data-user";

pub struct Harness {
    pub app: Router,
    pub state: Arc<AppState>,
    pub dir: tempfile::TempDir,
}

pub fn tokens() -> Tokens {
    Tokens::from_pairs([(CURATOR, Role::Curator), (OPERATOR, Role::Operator), (DATA_USER, Role::DataUser)])
}

pub fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::start(dir.path(), tokens(), 2).unwrap();
    Harness {
        app: router(Arc::clone(&state)),
        state,
        dir,
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

pub async fn call(app: &Router, method: Method, path: &str, token: Option<&str>, body: impl Into<Body>) -> Reply {
    let mut req = Request::builder().method(method).uri(path);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let res = app.clone().oneshot(req.body(body.into()).unwrap()).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub async fn get(app: &Router, path: &str, token: &str) -> Reply {
    call(app, Method::GET, path, Some(token), Body::empty()).await
}

/// 150 rows: two quasi columns, three sensitive ones and a label.
pub fn small_csv() -> String {
    let mut s = String::from("zip,age,income,score,flag,label\n");
    for i in 0..150u32 {
        let income = 1000.0 + f64::from((i * 37) % 101) * 10.5;
        s.push_str(&format!(
            "{},{},{income},{},{},{}\n",
            1000 + (i * 7) % 13,
            20 + (i * 11) % 50,
            f64::from((i * 13) % 29) / 3.0,
            if i % 3 == 0 { "y" } else { "n" },
            if income > 1500.0 { "hi" } else { "lo" }
        ));
    }
    s
}

pub async fn upload(app: &Router, csv: &str) -> String {
    let r = call(app, Method::POST, "/datasets?name=small", Some(CURATOR), csv.to_string()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.body));
    r.json()["id"].as_str().unwrap().to_string()
}

pub fn task_body(dataset: &str, e_t: f64) -> String {
    serde_json::json!({
        "dataset_id": dataset,
        "config": { "gq": ["zip", "age"], "app": "kl_generic", "tn": 3, "t": 1, "seed": 5, "e_t": e_t }
    })
    .to_string()
}

pub async fn create_task(app: &Router, body: String) -> String {
    let r = call(app, Method::POST, "/tasks", Some(CURATOR), body).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", String::from_utf8_lossy(&r.body));
    r.json()["id"].as_str().unwrap().to_string()
}

/// Polls until the task leaves the queue and the worker is done with it.
pub async fn wait_done(app: &Router, id: &str) -> Value {
    for _ in 0..3000 {
        let t = get(app, &format!("/tasks/{id}"), CURATOR).await.json();
        if matches!(t["task"]["state"].as_str(), Some("finished" | "failed" | "published")) {
            return t;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("task {id} did not finish");
}

/// Expected status per caller: no token, curator, operator, data user.
struct Case {
    method: Method,
    path: String,
    body: String,
    expect: [u16; 4],
}

/// Runs every endpoint as every kind of caller and returns the mismatches.
pub async fn role_matrix_failures(app: &Router) -> Vec<String> {
    let ds = upload(app, &small_csv()).await;
    let released = create_task(app, task_body(&ds, 0.0)).await;
    let rejected = create_task(app, task_body(&ds, 1.0)).await;
    let published = create_task(app, task_body(&ds, 0.0)).await;
    for id in [&released, &rejected, &published] {
        wait_done(app, id).await;
    }
    let r = call(app, Method::POST, &format!("/tasks/{published}/publish"), Some(CURATOR), Body::empty()).await;
    assert_eq!(r.status, StatusCode::OK);
    let pid = r.json()["id"].as_str().unwrap().to_string();
    let defaults = serde_json::to_string(&optimshare_core::pipeline::RunConfig::default()).unwrap();

    let case = |method: Method, path: String, body: String, expect: [u16; 4]| Case { method, path, body, expect };
    let cases = vec![
        case(Method::POST, "/datasets?name=x".into(), small_csv(), [401, 201, 403, 403]),
        case(Method::GET, "/datasets".into(), String::new(), [401, 200, 403, 403]),
        case(Method::POST, "/tasks".into(), task_body(&ds, 0.0), [401, 202, 403, 403]),
        case(Method::GET, "/tasks".into(), String::new(), [401, 200, 200, 403]),
        case(Method::GET, format!("/tasks/{released}"), String::new(), [401, 200, 200, 403]),
        case(Method::GET, format!("/tasks/{published}"), String::new(), [401, 200, 200, 200]),
        case(Method::GET, format!("/tasks/{released}/report"), String::new(), [401, 200, 403, 403]),
        case(Method::POST, format!("/tasks/{published}/publish"), String::new(), [401, 200, 403, 403]),
        case(Method::POST, format!("/tasks/{rejected}/publish"), String::new(), [401, 409, 403, 403]),
        case(Method::GET, "/published".into(), String::new(), [401, 200, 200, 200]),
        case(Method::GET, format!("/published/{pid}/data"), String::new(), [401, 200, 200, 200]),
        case(Method::GET, "/synthesizers".into(), String::new(), [401, 200, 200, 403]),
        case(Method::GET, "/config/defaults".into(), String::new(), [401, 200, 200, 403]),
        case(Method::PUT, "/config/defaults".into(), defaults, [401, 403, 200, 403]),
    ];
    let callers = [None, Some(CURATOR), Some(OPERATOR), Some(DATA_USER)];
    let mut failures = Vec::new();
    for c in &cases {
        for (who, &want) in callers.iter().zip(&c.expect) {
            let r = call(app, c.method.clone(), &c.path, *who, c.body.clone()).await;
            if r.status.as_u16() != want {
                failures.push(format!("{} {} as {:?}: got {}, want {want}", c.method, c.path, who, r.status));
            }
        }
    }
    // A wrong token is treated like no token.
    let r = call(app, Method::GET, "/published", Some("bogus"), Body::empty()).await;
    if r.status != StatusCode::UNAUTHORIZED {
        failures.push(format!("GET /published with a wrong token: got {}", r.status));
    }
    failures
}
