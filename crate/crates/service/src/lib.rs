//! HTTP API over the workflow checker: model sessions, fluent and assertion
//! editing, template instantiation and asynchronous checks.

mod session;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flowcheck::encoder::Limits;
use flowcheck::fltl::{check, executing_name, parse_formula, Assertion, CheckOptions, FluentDef, Verdict};
use flowcheck::model::{Diagnostic, Task};
use flowcheck::templates::{Catalog, TemplateError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub use session::{Problem, Session};

#[derive(Debug, Clone)]
pub struct Config {
    pub default_bound: u16,
    /// Upper limit on `maxStates` in check requests, and its default.
    pub max_states: usize,
    pub max_product_states: usize,
    /// Directory served for paths outside the API.
    pub static_dir: Option<PathBuf>,
    /// Sessions are saved here and reloaded on startup when set.
    pub data_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            default_bound: 1,
            max_states: Limits::default().max_states,
            max_product_states: CheckOptions::default().max_product_states,
            static_dir: None,
            data_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Job {
    pub id: String,
    pub session_id: String,
    pub assertion: String,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Inner {
    config: Config,
    catalog: Catalog,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    jobs: RwLock<HashMap<String, Arc<Mutex<Job>>>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Creates the state, reloading saved sessions from the data directory.
    pub fn new(config: Config, catalog: Catalog) -> Self {
        let mut sessions = HashMap::new();
        if let Some(dir) = &config.data_dir {
            for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
                match Session::load(&entry.path()) {
                    Ok(s) => {
                        sessions.insert(s.id.clone(), Arc::new(s));
                    }
                    Err(e) => tracing::warn!("skipping {}: {e}", entry.path().display()),
                }
            }
        }
        AppState(Arc::new(Inner {
            config,
            catalog,
            sessions: RwLock::new(sessions),
            jobs: RwLock::new(HashMap::new()),
        }))
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.0.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }

    fn persist(&self, s: &Session) {
        if let Some(dir) = &self.0.config.data_dir {
            if let Err(e) = s.save(dir) {
                tracing::warn!("cannot save session {}: {e}", s.id);
            }
        }
    }
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id}"))
    }

    fn rejected(problems: Vec<Problem>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": "rejected", "diagnostics": problems }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/models", post(create_model))
        .route("/models/{id}/graph", get(graph))
        .route("/models/{id}/alphabet", get(alphabet))
        .route("/models/{id}/fluents", get(get_fluents).put(put_fluents))
        .route("/models/{id}/assertions", get(get_assertions).put(put_assertions))
        .route("/models/{id}/check", post(start_check))
        .route("/models/{id}/export.flp", get(export_flp))
        .route("/templates", get(list_templates))
        .route("/templates/{tid}/instantiate", post(instantiate))
        .route("/jobs/{id}", get(get_job));
    let api = match &state.0.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.with_state(state)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Created {
    session_id: String,
    diagnostics: Vec<Diagnostic>,
}

async fn create_model(State(state): State<AppState>, body: String) -> ApiResult<Json<Created>> {
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), body).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let diagnostics = session.diagnostics.clone();
    state.persist(&session);
    state.0.sessions.write().unwrap().insert(id.clone(), Arc::new(session));
    Ok(Json(Created { session_id: id, diagnostics }))
}

fn task_node(task: &Task, path: &str) -> Value {
    let mut ports = json!({ "start": format!("{path}.start"), "end": format!("{path}.end") });
    if task.mi.is_some() {
        ports["instanceStart"] = json!(format!("{path}.inst.start"));
        ports["instanceEnd"] = json!(format!("{path}.inst.end"));
    }
    json!({
        "id": task.id.as_str(),
        "kind": "task",
        "join": task.join.code(),
        "split": task.split.code(),
        "multipleInstance": task.mi.as_ref().map(|m| json!({ "min": m.min, "max": m.max, "threshold": m.threshold })),
        "composite": task.subnet,
        "cancels": task.cancel_set.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
        "path": path,
        "executing": executing_name(path),
        "ports": ports,
    })
}

async fn graph(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = state.session(&id)?;
    let nets: Vec<Value> = s
        .spec
        .instances()
        .into_iter()
        .map(|inst| {
            let mut nodes: Vec<Value> = inst
                .net
                .conditions
                .values()
                .map(|c| json!({ "id": c.id.as_str(), "kind": "condition", "conditionKind": format!("{:?}", c.kind).to_lowercase() }))
                .collect();
            nodes.extend(inst.net.tasks.values().map(|t| task_node(t, &inst.qualify(&t.id))));
            let arcs: Vec<Value> =
                inst.net.flows.iter().map(|f| json!({ "from": f.from.as_str(), "to": f.to.as_str() })).collect();
            json!({ "id": inst.net.id, "path": inst.path, "nodes": nodes, "arcs": arcs })
        })
        .collect();
    Ok(Json(json!({ "nets": nets })))
}

async fn alphabet(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<String>>> {
    let s = state.session(&id)?;
    Ok(Json(s.alphabet.iter().map(ToString::to_string).collect()))
}

#[derive(Serialize, Deserialize)]
struct FluentDto {
    name: String,
    initiating: Vec<String>,
    terminating: Vec<String>,
    #[serde(default)]
    initially: bool,
}

impl From<&FluentDef> for FluentDto {
    fn from(f: &FluentDef) -> Self {
        FluentDto {
            name: f.name.clone(),
            initiating: f.initiating.iter().map(ToString::to_string).collect(),
            terminating: f.terminating.iter().map(ToString::to_string).collect(),
            initially: f.initially,
        }
    }
}

async fn get_fluents(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<FluentDto>>> {
    let s = state.session(&id)?;
    Ok(Json(s.props().fluents.iter().map(FluentDto::from).collect()))
}

async fn put_fluents(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<Vec<FluentDto>>,
) -> ApiResult<Json<Vec<FluentDto>>> {
    let s = state.session(&id)?;
    let fluents = body
        .into_iter()
        .map(|d| FluentDef::new(&d.name, d.initiating, d.terminating).initially(d.initially))
        .collect();
    s.set_fluents(fluents).map_err(ApiError::rejected)?;
    state.persist(&s);
    Ok(Json(s.props().fluents.iter().map(FluentDto::from).collect()))
}

#[derive(Serialize, Deserialize)]
struct AssertionDto {
    name: String,
    formula: String,
}

impl From<&Assertion> for AssertionDto {
    fn from(a: &Assertion) -> Self {
        AssertionDto { name: a.name.clone(), formula: a.formula.to_string() }
    }
}

async fn get_assertions(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<AssertionDto>>> {
    let s = state.session(&id)?;
    Ok(Json(s.props().assertions.iter().map(AssertionDto::from).collect()))
}

async fn put_assertions(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<Vec<AssertionDto>>,
) -> ApiResult<Json<Vec<AssertionDto>>> {
    let s = state.session(&id)?;
    let mut parsed = Vec::new();
    let mut problems = Vec::new();
    for d in body {
        match parse_formula(&d.formula) {
            Ok(formula) => parsed.push(Assertion { name: d.name, formula }),
            Err(e) => problems.push(Problem { kind: "syntax".into(), name: d.name, message: e.to_string() }),
        }
    }
    if !problems.is_empty() {
        return Err(ApiError::rejected(problems));
    }
    s.set_assertions(parsed).map_err(ApiError::rejected)?;
    state.persist(&s);
    Ok(Json(s.props().assertions.iter().map(AssertionDto::from).collect()))
}

async fn export_flp(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = state.session(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], s.export_flp()).into_response())
}

async fn list_templates(State(state): State<AppState>) -> Json<Value> {
    let list: Vec<Value> = state
        .0
        .catalog
        .templates
        .iter()
        .map(|t| {
            json!({
                "id": t.id,
                "title": t.title,
                "description": t.description,
                "params": t.params,
                "skeleton": t.skeleton.to_string(),
            })
        })
        .collect();
    Json(Value::Array(list))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct InstantiateRequest {
    session_id: String,
    bindings: BTreeMap<String, String>,
    #[serde(default)]
    name: Option<String>,
}

fn camel_case(id: &str) -> String {
    id.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut cs = w.chars();
            cs.next().map(|c| c.to_ascii_uppercase()).into_iter().chain(cs).collect::<String>()
        })
        .collect()
}

async fn instantiate(
    State(state): State<AppState>,
    Path(tid): Path<String>,
    Json(req): Json<InstantiateRequest>,
) -> ApiResult<Json<AssertionDto>> {
    let template = state.0.catalog.get(&tid).ok_or_else(|| ApiError::not_found("template", &tid))?;
    let s = state.session(&req.session_id)?;
    let props = s.props();
    let formula = template.instantiate(&req.bindings, |n| s.knows(&props, n)).map_err(|e| {
        let name = match &e {
            TemplateError::MissingBinding(p) | TemplateError::UnknownParameter(p) => p.clone(),
            TemplateError::InvalidBinding { param, .. } => param.clone(),
            TemplateError::UnknownName(n) => n.clone(),
            _ => tid.clone(),
        };
        ApiError::rejected(vec![Problem { kind: "binding".into(), name, message: e.to_string() }])
    })?;
    let base = req.name.unwrap_or_else(|| camel_case(&template.id));
    let added = s.add_assertion(&base, formula).map_err(ApiError::rejected)?;
    state.persist(&s);
    Ok(Json(AssertionDto::from(&added)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CheckRequest {
    assertion: String,
    bound: Option<u16>,
    max_states: Option<usize>,
}

async fn start_check(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<CheckRequest>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let s = state.session(&id)?;
    let props = s.props();
    let assertion = props.assertion(&req.assertion).cloned().ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, format!("session has no assertion named {}", req.assertion))
    })?;
    let fluents = s.all_fluents(&props);
    let config = &state.0.config;
    let bound = req.bound.unwrap_or(config.default_bound);
    let max_states = req.max_states.unwrap_or(config.max_states).min(config.max_states);
    let opts = CheckOptions { max_product_states: config.max_product_states };

    let job_id = uuid::Uuid::new_v4().simple().to_string();
    let job = Arc::new(Mutex::new(Job {
        id: job_id.clone(),
        session_id: id,
        assertion: assertion.name.clone(),
        status: JobStatus::Queued,
        result: None,
        error: None,
    }));
    state.0.jobs.write().unwrap().insert(job_id.clone(), job.clone());

    tokio::spawn(async move {
        job.lock().unwrap().status = JobStatus::Running;
        let outcome = tokio::task::spawn_blocking(move || {
            let lts = s.lts(bound, max_states)?;
            check(&lts, &fluents, &assertion.formula, opts).map_err(|e| e.to_string())
        })
        .await
        .unwrap_or_else(|e| Err(format!("check aborted: {e}")));
        let mut j = job.lock().unwrap();
        match outcome {
            Ok(v) => {
                j.result = Some(v);
                j.status = JobStatus::Done;
            }
            Err(e) => {
                j.error = Some(e);
                j.status = JobStatus::Failed;
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "jobId": job_id }))))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Job>> {
    let job = state.0.jobs.read().unwrap().get(&id).cloned().ok_or_else(|| ApiError::not_found("job", &id))?;
    let snapshot = job.lock().unwrap().clone();
    Ok(Json(snapshot))
}
