use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use optimshare_core::pipeline::{validate_config, Application, ReleaseReport, RunConfig};
use optimshare_core::tabular::{read_csv, CsvOptions};
use optimshare_core::FieldError;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::auth::{Principal, Role};
use crate::store::{now, DatasetRecord, Outcome, PublishedRecord, StoreError, TaskRecord, TaskState};
use crate::AppState;

const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    fields: Vec<FieldError>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            fields: Vec::new(),
        }
    }

    fn fields(fields: Vec<FieldError>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: "invalid configuration".into(),
            fields,
        }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        log::error!("store: {e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage failure")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if !self.fields.is_empty() {
            body["fields"] = json!(self.fields);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type AppStateRef = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(upload_dataset).get(list_datasets))
        .route("/tasks", post(create_task).get(list_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/tasks/{id}/report", get(get_report))
        .route("/tasks/{id}/publish", post(publish))
        .route("/published", get(list_published))
        .route("/published/{id}/data", get(published_data))
        .route("/synthesizers", get(list_synthesizers))
        .route("/config/defaults", get(get_defaults).put(put_defaults))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

#[derive(Deserialize)]
struct UploadParams {
    name: Option<String>,
}

async fn upload_dataset(
    State(state): AppStateRef,
    who: Principal,
    Query(params): Query<UploadParams>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    who.require(&[Role::Curator])?;
    let name = params.name.unwrap_or_else(|| "dataset".into());
    let dataset = read_csv(body.as_ref(), &name, &CsvOptions::default())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let mut st = state.store();
    let sha256 = st.put_blob(&body)?;
    let id = st.next_id("ds");
    let rec = DatasetRecord {
        id: id.clone(),
        name,
        sha256,
        n_rows: dataset.n_rows(),
        n_cols: dataset.n_cols(),
        columns: dataset.column_names(),
        uploaded_at: now(),
    };
    st.index.datasets.insert(id, rec.clone());
    st.persist()?;
    Ok((StatusCode::CREATED, Json(rec)))
}

async fn list_datasets(State(state): AppStateRef, who: Principal) -> ApiResult<Json<Vec<DatasetRecord>>> {
    who.require(&[Role::Curator])?;
    Ok(Json(state.store().index.datasets.values().cloned().collect()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateTask {
    dataset_id: String,
    #[serde(default)]
    config: Option<Value>,
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}")))
}

/// Request config keys laid over the service defaults.
fn merged_config(defaults: &RunConfig, overrides: Option<Value>) -> ApiResult<RunConfig> {
    let mut base = serde_json::to_value(defaults).expect("config serializes");
    match overrides {
        None | Some(Value::Null) => {}
        Some(Value::Object(m)) => {
            let obj = base.as_object_mut().expect("config is an object");
            obj.extend(m);
        }
        Some(_) => return Err(ApiError::fields(vec![FieldError::new("config", "must be an object")])),
    }
    serde_json::from_value(base).map_err(|e| ApiError::fields(vec![FieldError::new("config", e.to_string())]))
}

fn check_columns(config: &RunConfig, dataset: &DatasetRecord) -> Vec<FieldError> {
    let mut errs: Vec<FieldError> = config
        .gq
        .iter()
        .filter(|g| !dataset.columns.contains(g))
        .map(|g| FieldError::new("gq", format!("unknown column `{g}`")))
        .collect();
    match &config.label {
        Some(l) if !dataset.columns.contains(l) => errs.push(FieldError::new("label", format!("unknown column `{l}`"))),
        None if config.app == Application::GaussianNb => {
            errs.push(FieldError::new("label", "classification utility needs a class label"))
        }
        _ => {}
    }
    errs
}

async fn create_task(State(state): AppStateRef, who: Principal, body: Bytes) -> ApiResult<impl IntoResponse> {
    who.require(&[Role::Curator])?;
    let req: CreateTask = parse_json(&body)?;
    let mut st = state.store();
    let dataset = st.index.datasets.get(&req.dataset_id).cloned().ok_or_else(|| ApiError::not_found("dataset"))?;
    let config = merged_config(&st.index.defaults, req.config)?;
    let config = validate_config(&config).map_err(ApiError::fields)?;
    if state.registry.get(&config.synthesizer).is_err() {
        return Err(ApiError::fields(vec![FieldError::new(
            "synthesizer",
            format!("unknown synthesizer `{}`", config.synthesizer),
        )]));
    }
    let errs = check_columns(&config, &dataset);
    if !errs.is_empty() {
        return Err(ApiError::fields(errs));
    }
    let id = st.next_id("task");
    let t = now();
    let rec = TaskRecord {
        id: id.clone(),
        dataset_id: dataset.id,
        config,
        state: TaskState::Queued,
        progress: None,
        outcome: None,
        error: None,
        report_sha256: None,
        released_sha256: None,
        published_id: None,
        created_at: t,
        updated_at: t,
    };
    st.index.tasks.insert(id.clone(), rec.clone());
    st.persist()?;
    drop(st);
    state.enqueue(id);
    Ok((StatusCode::ACCEPTED, Json(rec)))
}

async fn list_tasks(State(state): AppStateRef, who: Principal) -> ApiResult<Json<Vec<TaskRecord>>> {
    who.require(&[Role::Curator, Role::Operator])?;
    Ok(Json(state.store().index.tasks.values().cloned().collect()))
}

fn load_report(state: &AppState, task: &TaskRecord) -> ApiResult<Option<Value>> {
    let Some(sha) = &task.report_sha256 else { return Ok(None) };
    let bytes = state.store().read_blob(sha)?;
    Ok(Some(serde_json::from_slice(&bytes).map_err(StoreError::from)?))
}

async fn get_task(State(state): AppStateRef, who: Principal, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let task = state.store().index.tasks.get(&id).cloned().ok_or_else(|| ApiError::not_found("task"))?;
    match who.role {
        Role::Curator => {
            let report = load_report(&state, &task)?;
            Ok(Json(json!({ "task": task, "report": report })))
        }
        Role::Operator => Ok(Json(json!({ "task": task }))),
        Role::DataUser => {
            if task.state != TaskState::Published {
                return Err(ApiError::new(StatusCode::FORBIDDEN, "task is not published"));
            }
            Ok(Json(json!({
                "task": { "id": task.id, "state": task.state, "published_id": task.published_id }
            })))
        }
    }
}

async fn get_report(State(state): AppStateRef, who: Principal, Path(id): Path<String>) -> ApiResult<Response> {
    who.require(&[Role::Curator])?;
    let task = state.store().index.tasks.get(&id).cloned().ok_or_else(|| ApiError::not_found("task"))?;
    let sha = task.report_sha256.ok_or_else(|| ApiError::not_found("report"))?;
    let bytes = state.store().read_blob(&sha)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn publish(State(state): AppStateRef, who: Principal, Path(id): Path<String>) -> ApiResult<Json<PublishedRecord>> {
    who.require(&[Role::Curator])?;
    let task = state.store().index.tasks.get(&id).cloned().ok_or_else(|| ApiError::not_found("task"))?;
    if let Some(pid) = &task.published_id {
        let rec = state.store().index.published.get(pid).cloned();
        return rec.map(Json).ok_or_else(|| ApiError::not_found("published record"));
    }
    let (TaskState::Finished, Some(Outcome::Released), Some(released_sha)) = (task.state, task.outcome, &task.released_sha256)
    else {
        return Err(ApiError::new(StatusCode::CONFLICT, "task has no released instance to publish"));
    };
    let report: ReleaseReport = {
        let bytes = state.store().read_blob(task.report_sha256.as_deref().unwrap_or_default())?;
        serde_json::from_slice(&bytes).map_err(StoreError::from)?
    };
    let inst = report
        .released_id()
        .and_then(|rid| report.instance(rid))
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "report has no released instance"))?;
    let mut st = state.store();
    let dataset_name = st.index.datasets.get(&task.dataset_id).map_or_else(String::new, |d| d.name.clone());
    let columns = report.metadata.as_ref().map_or_else(Vec::new, |m| {
        m.columns
            .iter()
            .filter(|c| c.role != Some(optimshare_core::tabular::Role::Dropped))
            .map(|c| c.name.clone())
            .collect()
    });
    let pid = format!("pub-{}", task.id);
    let rec = PublishedRecord {
        id: pid.clone(),
        task_id: task.id.clone(),
        dataset_name,
        sha256: released_sha.clone(),
        n_rows: report.input.n_rows,
        columns,
        epsilon: inst.epsilon,
        delta: inst.delta,
        utility: inst.utility.u_perturbed,
        effectiveness: inst.effectiveness,
        published_at: now(),
    };
    st.index.published.insert(pid.clone(), rec.clone());
    if let Some(t) = st.index.tasks.get_mut(&id) {
        t.state = TaskState::Published;
        t.published_id = Some(pid);
        t.updated_at = now();
    }
    st.persist()?;
    Ok(Json(rec))
}

async fn list_published(State(state): AppStateRef, _who: Principal) -> Json<Vec<PublishedRecord>> {
    Json(state.store().index.published.values().cloned().collect())
}

async fn published_data(State(state): AppStateRef, _who: Principal, Path(id): Path<String>) -> ApiResult<Response> {
    let st = state.store();
    let rec = st.index.published.get(&id).ok_or_else(|| ApiError::not_found("published dataset"))?;
    let bytes = st.read_blob(&rec.sha256)?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv".to_string()),
            (header::HeaderName::from_static("x-content-sha256"), rec.sha256.clone()),
        ],
        bytes,
    )
        .into_response())
}

async fn list_synthesizers(State(state): AppStateRef, who: Principal) -> ApiResult<Json<Vec<String>>> {
    who.require(&[Role::Curator, Role::Operator])?;
    Ok(Json(state.registry.names()))
}

async fn get_defaults(State(state): AppStateRef, who: Principal) -> ApiResult<Json<RunConfig>> {
    who.require(&[Role::Curator, Role::Operator])?;
    Ok(Json(state.store().index.defaults.clone()))
}

async fn put_defaults(State(state): AppStateRef, who: Principal, body: Bytes) -> ApiResult<Json<RunConfig>> {
    who.require(&[Role::Operator])?;
    let config: RunConfig = serde_json::from_slice(&body)
        .map_err(|e| ApiError::fields(vec![FieldError::new("config", e.to_string())]))?;
    validate_config(&config).map_err(ApiError::fields)?;
    if state.registry.get(&config.synthesizer).is_err() {
        return Err(ApiError::fields(vec![FieldError::new("synthesizer", "unknown synthesizer")]));
    }
    let mut st = state.store();
    st.index.defaults = config.clone();
    st.persist()?;
    Ok(Json(config))
}

