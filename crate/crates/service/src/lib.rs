//! HTTP facade over panel validation, allocation and reporting.
//!
//! Panels and runs live in memory for the lifetime of the process. Run
//! records move from `pending` to `done` or `failed` exactly once and are
//! never modified afterwards.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use groupopt_core::evaluation::build_report;
use groupopt_core::io::{self, ColumnSpec, IoError, ManualOverride, ReportDocument};
use groupopt_core::synthetic::tables_near_ten;
use groupopt_core::{
    suggest_cluster_tables, AllocationError, AllocationPlan, Allocator, ClusterSuggestion, Panel, RunConfig,
    TableLayout, ValidationIssue,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<ValidationIssue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<ClusterSuggestion>,
}

impl ErrorBody {
    fn new(error: impl Into<String>) -> Self {
        Self {
            error: error.into(),
            issues: Vec::new(),
            suggestion: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub panel_id: String,
    pub status: RunStatus,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelCreated {
    pub panel_id: String,
    pub participants: usize,
    pub demographics: Vec<String>,
    pub cluster_participants: usize,
    /// Warnings; errors are reported with status 400 instead.
    pub issues: Vec<ValidationIssue>,
    pub default_num_tables: usize,
    /// Cluster-table counts for `default_num_tables`, when the panel clusters.
    pub suggestion: Option<ClusterSuggestion>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunCreated {
    pub run_id: String,
    pub status: RunStatus,
}

/// JSON upload: panel text plus the column roles from the configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelUpload {
    pub csv: String,
    pub columns: ColumnSpec,
    #[serde(default)]
    pub delimiter: Option<char>,
    #[serde(default)]
    pub num_tables: Option<usize>,
    #[serde(default)]
    pub manual_overrides: Vec<ManualOverride>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub panel_id: String,
    pub config: RunConfig,
}

/// One table in one round of the JSON allocation download.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSeating {
    pub round: usize,
    pub table: usize,
    pub is_cluster_table: bool,
    pub participants: Vec<String>,
}

struct Completed {
    plan: AllocationPlan,
    layout: TableLayout,
}

#[derive(Default)]
struct Store {
    panels: RwLock<HashMap<String, Arc<Panel>>>,
    runs: RwLock<HashMap<String, RunRecord>>,
    plans: RwLock<HashMap<String, Arc<Completed>>>,
    next_panel: AtomicU64,
    next_run: AtomicU64,
}

/// Shared service state. Cloning shares the same store.
#[derive(Clone, Default)]
pub struct AppState {
    store: Arc<Store>,
    spool: Option<PathBuf>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also writes each completed run's report and allocation table under
    /// `dir/<run_id>/`.
    pub fn with_spool(dir: impl Into<PathBuf>) -> Self {
        Self {
            store: Arc::default(),
            spool: Some(dir.into()),
        }
    }

    pub fn insert_panel(&self, panel: Panel) -> String {
        let id = format!("panel-{}", self.store.next_panel.fetch_add(1, Ordering::Relaxed) + 1);
        self.store.panels.write().unwrap().insert(id.clone(), Arc::new(panel));
        id
    }

    pub fn panel(&self, id: &str) -> Option<Arc<Panel>> {
        self.store.panels.read().unwrap().get(id).cloned()
    }

    pub fn run_record(&self, id: &str) -> Option<RunRecord> {
        self.store.runs.read().unwrap().get(id).cloned()
    }

    /// Registers a pending run for an existing panel.
    pub fn begin_run(&self, panel_id: &str, config: RunConfig) -> Option<String> {
        self.panel(panel_id)?;
        let id = format!("run-{}", self.store.next_run.fetch_add(1, Ordering::Relaxed) + 1);
        let record = RunRecord {
            run_id: id.clone(),
            panel_id: panel_id.to_owned(),
            status: RunStatus::Pending,
            config,
            report: None,
            error: None,
        };
        self.store.runs.write().unwrap().insert(id.clone(), record);
        Some(id)
    }

    /// Executes a pending run and stores its outcome. Finished runs are left
    /// untouched.
    pub fn execute_run(&self, run_id: &str) {
        let Some(record) = self.run_record(run_id).filter(|r| r.status == RunStatus::Pending) else {
            return;
        };
        let Some(panel) = self.panel(&record.panel_id) else {
            return;
        };
        let finished = match Allocator::new(&panel, &record.config).and_then(|a| a.run()) {
            Ok(outcome) => {
                let report = build_report(&outcome.plan, &panel, &outcome.layout, &record.config);
                let doc = ReportDocument::new(&record.config, report);
                let completed = Completed {
                    plan: outcome.plan,
                    layout: outcome.layout,
                };
                if let Some(dir) = &self.spool {
                    if let Err(e) = spool(dir, run_id, &doc, &panel, &completed) {
                        eprintln!("spool for {run_id} failed: {e}");
                    }
                }
                Ok((doc, completed))
            }
            Err(e) => Err(allocation_error_body(&e)),
        };

        let mut runs = self.store.runs.write().unwrap();
        let Some(stored) = runs.get_mut(run_id).filter(|r| r.status == RunStatus::Pending) else {
            return;
        };
        match finished {
            Ok((doc, completed)) => {
                // The plan is visible before the status flips to done.
                self.store
                    .plans
                    .write()
                    .unwrap()
                    .insert(run_id.to_owned(), Arc::new(completed));
                stored.report = Some(doc);
                stored.status = RunStatus::Done;
            }
            Err(body) => {
                stored.error = Some(body);
                stored.status = RunStatus::Failed;
            }
        }
    }
}

fn spool(dir: &std::path::Path, run_id: &str, doc: &ReportDocument, panel: &Panel, run: &Completed) -> Result<(), IoError> {
    let dir = dir.join(run_id);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.json"), doc.to_json()?)?;
    let file = std::fs::File::create(dir.join("allocations.csv"))?;
    io::write_allocations(&run.plan, panel, &run.layout, file)
}

fn allocation_error_body(err: &AllocationError) -> ErrorBody {
    ErrorBody {
        error: err.to_string(),
        issues: Vec::new(),
        suggestion: match err {
            AllocationError::Config(c) => c.suggestion(),
            _ => None,
        },
    }
}

fn error(status: StatusCode, body: ErrorBody) -> Response {
    (status, Json(body)).into_response()
}

fn io_error_body(err: IoError) -> ErrorBody {
    match err {
        IoError::Invalid { issues } => ErrorBody {
            error: "panel failed validation".into(),
            issues,
            suggestion: None,
        },
        other => ErrorBody::new(other.to_string()),
    }
}

fn is_json(headers: &HeaderMap, name: header::HeaderName) -> bool {
    headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("application/json"))
}

#[derive(Debug, Default, Deserialize)]
struct UploadQuery {
    num_tables: Option<usize>,
}

/// Column roles for a bare CSV upload: the first column is the id and every
/// other column is balanced.
fn bare_columns(text: &str) -> Option<ColumnSpec> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().ok()?;
    let mut names = headers.iter().map(str::to_owned);
    Some(ColumnSpec {
        id: names.next()?,
        demographics: names.collect(),
        cluster: None,
        manual: None,
    })
}

async fn create_panel(
    State(state): State<AppState>,
    Query(query): Query<UploadQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    if body.iter().all(u8::is_ascii_whitespace) {
        return error(StatusCode::BAD_REQUEST, ErrorBody::new("request body is empty"));
    }
    let upload = if is_json(&headers, header::CONTENT_TYPE) {
        match serde_json::from_slice::<PanelUpload>(&body) {
            Ok(u) => u,
            Err(e) => return error(StatusCode::BAD_REQUEST, ErrorBody::new(format!("invalid upload: {e}"))),
        }
    } else {
        let Ok(text) = String::from_utf8(body.to_vec()) else {
            return error(StatusCode::BAD_REQUEST, ErrorBody::new("panel file is not UTF-8"));
        };
        let Some(columns) = bare_columns(&text) else {
            return error(StatusCode::BAD_REQUEST, ErrorBody::new("panel file has no header row"));
        };
        PanelUpload {
            csv: text,
            columns,
            delimiter: None,
            num_tables: query.num_tables,
            manual_overrides: Vec::new(),
        }
    };

    let delimiter = upload.delimiter.unwrap_or(',');
    if !delimiter.is_ascii() {
        return error(StatusCode::BAD_REQUEST, ErrorBody::new("delimiter must be a single ASCII character"));
    }
    let loaded = match io::parse_panel(
        upload.csv.as_bytes(),
        &upload.columns,
        delimiter as u8,
        &upload.manual_overrides,
        upload.num_tables,
    ) {
        Ok(l) => l,
        Err(e) => return error(StatusCode::BAD_REQUEST, io_error_body(e)),
    };
    let panel = loaded.panel;
    let default_num_tables = upload.num_tables.unwrap_or_else(|| tables_near_ten(panel.len()));
    let suggestion = panel
        .has_clustering()
        .then(|| suggest_cluster_tables(&panel, &RunConfig::new(default_num_tables, 1)).ok())
        .flatten();
    // Holder counts are judged against the table count the run will default to.
    let issues = match upload.num_tables {
        Some(_) => loaded.warnings,
        None => panel.to_raw().validate(Some(default_num_tables)),
    };
    let created = PanelCreated {
        participants: panel.len(),
        demographics: panel.demographics().iter().map(|d| d.name.clone()).collect(),
        cluster_participants: panel.cluster_count(),
        issues,
        default_num_tables,
        suggestion,
        panel_id: state.insert_panel(panel),
    };
    (StatusCode::CREATED, Json(created)).into_response()
}

async fn create_run(State(state): State<AppState>, body: Bytes) -> Response {
    let request: RunRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, ErrorBody::new(format!("invalid run request: {e}"))),
    };
    let Some(panel) = state.panel(&request.panel_id) else {
        return error(
            StatusCode::NOT_FOUND,
            ErrorBody::new(format!("unknown panel '{}'", request.panel_id)),
        );
    };
    if let Err(e) = Allocator::new(&panel, &request.config) {
        return error(StatusCode::UNPROCESSABLE_ENTITY, allocation_error_body(&e));
    }
    let Some(run_id) = state.begin_run(&request.panel_id, request.config) else {
        return error(StatusCode::NOT_FOUND, ErrorBody::new("panel disappeared"));
    };
    let worker = state.clone();
    let id = run_id.clone();
    if let Err(e) = tokio::task::spawn_blocking(move || worker.execute_run(&id)).await {
        return error(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new(format!("run task failed: {e}")));
    }
    let status = state.run_record(&run_id).map_or(RunStatus::Failed, |r| r.status);
    (StatusCode::CREATED, Json(RunCreated { run_id, status })).into_response()
}

async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.run_record(&id) {
        Some(record) => Json(record).into_response(),
        None => error(StatusCode::NOT_FOUND, ErrorBody::new(format!("unknown run '{id}'"))),
    }
}

fn seatings(panel: &Panel, run: &Completed) -> Vec<TableSeating> {
    let mut out = Vec::new();
    for (k, round) in run.plan.rounds.iter().enumerate() {
        for (table, members) in round.members(run.layout.num_tables()).into_iter().enumerate() {
            let mut participants: Vec<String> = members.iter().map(|&i| panel.participant(i).id().to_owned()).collect();
            participants.sort();
            out.push(TableSeating {
                round: k + 1,
                table: table + 1,
                is_cluster_table: run.layout.is_cluster_table(table),
                participants,
            });
        }
    }
    out
}

async fn get_allocations(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    let Some(record) = state.run_record(&id) else {
        return error(StatusCode::NOT_FOUND, ErrorBody::new(format!("unknown run '{id}'")));
    };
    let completed = state.store.plans.read().unwrap().get(&id).cloned();
    let (Some(run), Some(panel)) = (completed, state.panel(&record.panel_id)) else {
        let status = serde_json::to_value(record.status).unwrap_or_default();
        return error(
            StatusCode::CONFLICT,
            ErrorBody::new(format!("run '{id}' has no allocation (status {status})")),
        );
    };
    if is_json(&headers, header::ACCEPT) {
        return Json(seatings(&panel, &run)).into_response();
    }
    let mut bytes = Vec::new();
    if let Err(e) = io::write_allocations(&run.plan, &panel, &run.layout, &mut bytes) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new(e.to_string()));
    }
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], bytes).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/panels", post(create_panel))
        .route("/api/runs", post(create_run))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/runs/{id}/allocations", get(get_allocations))
        .with_state(state)
}
