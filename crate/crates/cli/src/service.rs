//! HTTP API over loaded datasets.
//!
//! Routes:
//!
//! | method | path | body / query |
//! |---|---|---|
//! | POST | `/api/datasets` | multipart zip (`file`) or JSON `{"path": ...}` / `{"paths": [...]}` |
//! | GET | `/api/datasets` | |
//! | GET | `/api/datasets/{id}` | |
//! | DELETE | `/api/datasets/{id}` | |
//! | POST | `/api/datasets/{id}/efficient` | JSON `{"enabled": bool, "cap": n}` |
//! | GET | `/api/datasets/{id}/{statistic}` | query parameters, `format=json\|csv` |
//!
//! Errors are JSON objects `{"error": ..., "detail": ...}`.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path as UrlPath, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use iohbench_core::dataset::{load_folders, trim_efficient, LoadError, LoadReport, RunDataset};
use iohbench_core::query::{run_query, QueryError, QueryParams, Statistic};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

/// Default upload limit in bytes.
pub const DEFAULT_BODY_LIMIT: usize = 512 * 1024 * 1024;

/// Record cap used when efficient mode is enabled without one.
pub const DEFAULT_EFFICIENT_CAP: usize = 100;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, error: impl Into<String>, detail: impl Into<Value>) -> Self {
        ApiError { status, error: error.into(), detail: detail.into() }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown dataset", id)
    }

    fn bad_request(error: impl Into<String>, detail: impl Into<Value>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, error, detail)
    }

    fn unprocessable(error: impl Into<String>, detail: impl Into<Value>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, error, detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.error, "detail": self.detail }))).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match &e {
            QueryError::UnknownStatistic(name) => ApiError::new(StatusCode::NOT_FOUND, e.to_string(), name.as_str()),
            QueryError::BadParam { name, .. } => ApiError::bad_request(e.to_string(), name.as_str()),
            QueryError::NoMatch | QueryError::Stats(_) => ApiError::bad_request(e.to_string(), Value::Null),
        }
    }
}

fn load_error(e: LoadError) -> ApiError {
    ApiError::unprocessable("dataset could not be loaded", e.to_string())
}

/// A registered dataset. The active snapshot is either the full dataset or
/// its trimmed copy.
#[derive(Clone)]
pub struct Entry {
    pub id: String,
    pub source: String,
    pub full: Arc<RunDataset>,
    pub active: Arc<RunDataset>,
    pub report: LoadReport,
    pub efficient_cap: Option<usize>,
}

#[derive(Serialize)]
struct ReportView<'a> {
    entries: &'a [iohbench_core::dataset::ReportEntry],
    warnings: &'a [String],
    prompt: Vec<String>,
}

impl Entry {
    fn view(&self) -> Value {
        json!({
            "id": self.id,
            "source": self.source,
            "direction": self.full.direction,
            "efficient": self.efficient_cap.is_some(),
            "cap": self.efficient_cap,
            "report": ReportView {
                entries: &self.report.entries,
                warnings: &self.report.warnings,
                prompt: self.report.prompt_lines(),
            },
        })
    }
}

/// Process-lifetime dataset store. Queries clone an `Arc` snapshot and
/// release the lock before computing.
#[derive(Default)]
pub struct Registry {
    next: AtomicU64,
    entries: RwLock<BTreeMap<u64, Entry>>,
}

fn parse_id(id: &str) -> Option<u64> {
    id.strip_prefix("ds")?.parse().ok()
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn insert(&self, source: String, dataset: RunDataset, report: LoadReport) -> Entry {
        let n = self.next.fetch_add(1, Ordering::Relaxed) + 1;
        let full = Arc::new(dataset);
        let entry =
            Entry { id: format!("ds{n}"), source, active: full.clone(), full, report, efficient_cap: None };
        self.entries.write().expect("registry lock").insert(n, entry.clone());
        entry
    }

    pub fn get(&self, id: &str) -> Option<Entry> {
        let n = parse_id(id)?;
        self.entries.read().expect("registry lock").get(&n).cloned()
    }

    pub fn remove(&self, id: &str) -> bool {
        parse_id(id).is_some_and(|n| self.entries.write().expect("registry lock").remove(&n).is_some())
    }

    pub fn list(&self) -> Vec<Entry> {
        self.entries.read().expect("registry lock").values().cloned().collect()
    }

    /// Swaps the active snapshot; `None` restores the full dataset.
    pub fn set_efficient(&self, id: &str, cap: Option<usize>) -> Option<Entry> {
        let n = parse_id(id)?;
        let full = self.entries.read().expect("registry lock").get(&n)?.full.clone();
        let active = match cap {
            Some(c) => Arc::new(trim_efficient(&full, c)),
            None => full,
        };
        let mut map = self.entries.write().expect("registry lock");
        let e = map.get_mut(&n)?;
        e.active = active;
        e.efficient_cap = cap;
        Some(e.clone())
    }

    /// Loads folders as one dataset and registers it.
    pub fn load_paths(&self, paths: &[PathBuf]) -> Result<Entry, LoadError> {
        let (ds, report) = load_folders(paths)?;
        let source = paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ");
        Ok(self.insert(source, ds, report))
    }
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
}

pub struct RouterOptions {
    pub body_limit: usize,
    /// Directory of built dashboard assets served at `/`.
    pub assets: Option<PathBuf>,
}

impl Default for RouterOptions {
    fn default() -> Self {
        RouterOptions { body_limit: DEFAULT_BODY_LIMIT, assets: None }
    }
}

pub fn router(registry: Arc<Registry>, options: RouterOptions) -> Router {
    let api = Router::new()
        .route("/api/datasets", get(list_datasets).post(upload))
        .route("/api/datasets/{id}", axum::routing::delete(delete_dataset).get(get_dataset))
        .route("/api/datasets/{id}/efficient", post(set_efficient))
        .route("/api/datasets/{id}/{statistic}", get(query))
        .layer(DefaultBodyLimit::max(options.body_limit))
        .with_state(AppState { registry });
    match options.assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn list_datasets(State(s): State<AppState>) -> Json<Value> {
    Json(Value::Array(s.registry.list().iter().map(Entry::view).collect()))
}

async fn get_dataset(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    s.registry.get(&id).map(|e| Json(e.view())).ok_or_else(|| ApiError::not_found(&id))
}

async fn delete_dataset(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    if s.registry.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(&id))
    }
}

#[derive(Deserialize)]
struct PathUpload {
    path: Option<PathBuf>,
    paths: Option<Vec<PathBuf>>,
    format: Option<String>,
}

fn check_format(format: Option<&str>) -> Result<(), ApiError> {
    match format {
        None | Some("") | Some("iohprofiler") => Ok(()),
        Some(other) => Err(ApiError::bad_request("unsupported data format", other)),
    }
}

async fn upload(State(s): State<AppState>, req: Request) -> Result<(StatusCode, Json<Value>), ApiError> {
    let content_type =
        req.headers().get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or_default().to_string();
    let registry = s.registry.clone();
    let entry = if content_type.starts_with("multipart/form-data") {
        let mut mp = Multipart::from_request(req, &s)
            .await
            .map_err(|e| ApiError::bad_request("invalid multipart body", e.body_text()))?;
        let mut archive: Option<(String, Bytes)> = None;
        let mut format = None;
        while let Some(field) =
            mp.next_field().await.map_err(|e| ApiError::bad_request("invalid multipart body", e.body_text()))?
        {
            let name = field.name().unwrap_or_default().to_string();
            if name == "format" {
                format = Some(field.text().await.map_err(|e| ApiError::bad_request("invalid field", e.body_text()))?);
                continue;
            }
            let file_name = field.file_name().unwrap_or("upload.zip").to_string();
            let bytes = field.bytes().await.map_err(|e| ApiError::bad_request("invalid upload", e.body_text()))?;
            archive = Some((file_name, bytes));
        }
        check_format(format.as_deref())?;
        let (name, bytes) = archive.ok_or_else(|| ApiError::bad_request("missing archive", "expected a 'file' field"))?;
        tokio::task::spawn_blocking(move || load_archive(&registry, &name, &bytes))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "upload task failed", e.to_string()))??
    } else {
        let Json(body) = Json::<PathUpload>::from_request(req, &s)
            .await
            .map_err(|e| ApiError::bad_request("invalid JSON body", e.body_text()))?;
        check_format(body.format.as_deref())?;
        let mut paths = body.paths.unwrap_or_default();
        paths.extend(body.path);
        if paths.is_empty() {
            return Err(ApiError::bad_request("missing path", "expected 'path' or 'paths'"));
        }
        tokio::task::spawn_blocking(move || registry.load_paths(&paths).map_err(load_error))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "upload task failed", e.to_string()))??
    };
    Ok((StatusCode::CREATED, Json(entry.view())))
}

/// Extracts a zip archive into a scratch directory and loads it.
pub fn load_archive(registry: &Registry, name: &str, bytes: &[u8]) -> Result<Entry, ApiError> {
    let mut zip = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| ApiError::unprocessable("malformed archive", e.to_string()))?;
    if zip.is_empty() {
        return Err(ApiError::unprocessable("malformed archive", "archive is empty"));
    }
    let scratch =
        tempfile::tempdir().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "scratch dir", e.to_string()))?;
    extract(&mut zip, scratch.path())?;
    let (ds, report) = load_folders(&[scratch.path().to_path_buf()]).map_err(|e| {
        // paths inside the scratch directory mean nothing to the client
        let detail = e.to_string().replace(&format!("{}/", scratch.path().display()), "");
        ApiError::unprocessable("malformed archive", detail)
    })?;
    let mut report = report;
    let prefix = scratch.path().to_path_buf();
    report.files = report.files.iter().map(|f| f.strip_prefix(&prefix).unwrap_or(f).to_path_buf()).collect();
    for w in report.warnings.iter_mut() {
        *w = w.replace(&format!("{}/", prefix.display()), "");
    }
    Ok(registry.insert(name.to_string(), ds, report))
}

fn extract(zip: &mut zip::ZipArchive<Cursor<&[u8]>>, into: &Path) -> Result<(), ApiError> {
    let bad = |e: String| ApiError::unprocessable("malformed archive", e);
    for i in 0..zip.len() {
        let mut file = zip.by_index(i).map_err(|e| bad(e.to_string()))?;
        let Some(rel) = file.enclosed_name() else {
            return Err(bad(format!("unsafe entry name '{}'", file.name())));
        };
        let out = into.join(rel);
        if file.is_dir() {
            std::fs::create_dir_all(&out).map_err(|e| bad(e.to_string()))?;
            continue;
        }
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent).map_err(|e| bad(e.to_string()))?;
        }
        let mut w = std::fs::File::create(&out).map_err(|e| bad(e.to_string()))?;
        std::io::copy(&mut file, &mut w).map_err(|e| bad(e.to_string()))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct EfficientBody {
    enabled: bool,
    cap: Option<usize>,
}

async fn set_efficient(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<EfficientBody>, axum::extract::rejection::JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::bad_request("invalid JSON body", e.body_text()))?;
    if s.registry.get(&id).is_none() {
        return Err(ApiError::not_found(&id));
    }
    let cap = match (body.enabled, body.cap) {
        (false, _) => None,
        (true, Some(c)) if c < 2 => return Err(ApiError::bad_request("cap must be at least 2", c)),
        (true, c) => Some(c.unwrap_or(DEFAULT_EFFICIENT_CAP)),
    };
    let registry = s.registry.clone();
    let entry = tokio::task::spawn_blocking(move || registry.set_efficient(&id, cap))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "trim task failed", e.to_string()))?
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown dataset", Value::Null))?;
    Ok(Json(entry.view()))
}

async fn query(
    State(s): State<AppState>,
    UrlPath((id, statistic)): UrlPath<(String, String)>,
    Query(pairs): Query<Vec<(String, String)>>,
) -> Result<Response, ApiError> {
    let entry = s.registry.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let stat: Statistic = statistic.parse()?;
    let format = pairs.iter().rev().find(|(k, _)| k == "format").map_or("json", |(_, v)| v.as_str()).to_string();
    if format != "json" && format != "csv" {
        return Err(ApiError::bad_request("format must be 'json' or 'csv'", format));
    }
    let params = QueryParams::from_pairs(pairs)?;
    let ds = entry.active.clone();
    let out = tokio::task::spawn_blocking(move || run_query(&ds, stat, &params))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "query task failed", e.to_string()))??;
    Ok(if format == "csv" {
        ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], out.to_csv()).into_response()
    } else {
        let mut body = out.to_json();
        body["dataset"] = Value::String(entry.id.clone());
        Json(body).into_response()
    })
}
