//! HTTP service: predictions, telemetry ingestion, the alert feed and model
//! metadata under `/api/v1`.
//!
//! Every error body has the shape `{"error": {"code", "message", "field"?}}`.
//! Alerts are appended to an optional JSON-lines log and replayed from it on
//! startup.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::oneshot;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::dataset::{FeatureVector, OXY_RANGE, RH_RANGE, TEMP_RANGE};
use crate::edge::{AlertEvent, AlertSink, EdgeError, EdgePipeline, SensorReading, ThresholdConfig};
use crate::pipeline::{LoadedModel, PipelineError};

pub const DEFAULT_ADDR: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_PAGE: usize = 100;
pub const MAX_PAGE: usize = 500;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] PipelineError),
    #[error("alert log {path}: {message}")]
    AlertLog { path: PathBuf, message: String },
    #[error("invalid CORS origin `{0}`")]
    CorsOrigin(String),
    #[error("runtime: {0}")]
    Runtime(#[from] std::io::Error),
}

#[derive(Default)]
pub struct ServiceConfig {
    pub addr: String,
    pub port: u16,
    /// Manifest, artifact directory or bare model file. A missing file
    /// means the service runs without a model and answers 503.
    pub model: Option<PathBuf>,
    pub alert_log: Option<PathBuf>,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
    pub threshold: ThresholdConfig,
    pub sinks: Vec<Arc<dyn AlertSink>>,
}

impl ServiceConfig {
    pub fn new() -> Self {
        ServiceConfig {
            addr: DEFAULT_ADDR.to_string(),
            port: DEFAULT_PORT,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct StoredAlert {
    seq: u64,
    event: AlertEvent,
}

impl StoredAlert {
    fn key(&self) -> (u64, &str, u64) {
        (self.event.timestamp, self.event.node_id.as_str(), self.seq)
    }
}

/// Alerts ordered by `(ts_ms, node_id, arrival)`, optionally mirrored to an
/// append-only JSON-lines file.
pub struct AlertStore {
    alerts: Vec<StoredAlert>,
    next_seq: u64,
    file: Option<(PathBuf, File)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlertPage {
    pub events: Vec<AlertEvent>,
    pub cursor: Option<String>,
}

impl AlertStore {
    pub fn in_memory() -> Self {
        AlertStore {
            alerts: Vec::new(),
            next_seq: 0,
            file: None,
        }
    }

    /// Replays `path` if it exists, then appends to it.
    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        let log_err = |message: String| ServiceError::AlertLog {
            path: path.to_path_buf(),
            message,
        };
        let mut store = Self::in_memory();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| log_err(e.to_string()))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| log_err(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: AlertEvent = serde_json::from_str(&line)
                    .map_err(|e| log_err(format!("line {}: {e}", i + 1)))?;
                store.insert(event);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| log_err(e.to_string()))?;
        store.file = Some((path.to_path_buf(), file));
        Ok(store)
    }

    fn insert(&mut self, event: AlertEvent) {
        let stored = StoredAlert {
            seq: self.next_seq,
            event,
        };
        self.next_seq += 1;
        let pos = self.alerts.partition_point(|a| a.key() < stored.key());
        self.alerts.insert(pos, stored);
    }

    pub fn append(&mut self, event: AlertEvent) -> std::io::Result<()> {
        if let Some((_, file)) = &mut self.file {
            let line = serde_json::to_string(&event).expect("events serialize");
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        self.insert(event);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.alerts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alerts.is_empty()
    }

    /// Newest first. `after` is a cursor from a previous page; the page
    /// continues with events older than the one it names.
    pub fn page(&self, after: Option<&str>, limit: usize) -> Result<AlertPage, String> {
        let end = match after {
            None => self.alerts.len(),
            Some(c) => {
                let seq = decode_cursor(c).ok_or_else(|| format!("cursor `{c}` is not valid"))?;
                self.alerts
                    .iter()
                    .position(|a| a.seq == seq)
                    .ok_or_else(|| format!("cursor `{c}` does not name a stored alert"))?
            }
        };
        let start = end.saturating_sub(limit);
        let events = self.alerts[start..end]
            .iter()
            .rev()
            .map(|a| a.event.clone())
            .collect();
        let cursor = (start > 0).then(|| encode_cursor(self.alerts[start].seq));
        Ok(AlertPage { events, cursor })
    }
}

fn encode_cursor(seq: u64) -> String {
    format!("a{seq:x}")
}

fn decode_cursor(c: &str) -> Option<u64> {
    let hex = c.strip_prefix('a')?;
    if hex.is_empty() || hex.starts_with('+') {
        return None;
    }
    u64::from_str_radix(hex, 16).ok()
}

/// Shared state behind the router.
pub struct AppState {
    model: Option<Arc<LoadedModel>>,
    edge: Mutex<EdgePipeline>,
    store: Mutex<AlertStore>,
    sinks: Vec<Arc<dyn AlertSink>>,
}

impl AppState {
    pub fn new(
        model: Option<LoadedModel>,
        store: AlertStore,
        threshold: ThresholdConfig,
        sinks: Vec<Arc<dyn AlertSink>>,
    ) -> Self {
        AppState {
            model: model.map(Arc::new),
            edge: Mutex::new(EdgePipeline::new(threshold)),
            store: Mutex::new(store),
            sinks,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            field: None,
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn with_field(mut self, field: &str) -> Self {
        self.field = Some(field.to_string());
        self
    }

    pub fn body(&self) -> Value {
        let mut inner = json!({ "code": self.code, "message": self.message });
        if let Some(f) = &self.field {
            inner["field"] = json!(f);
        }
        json!({ "error": inner })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, self.body().to_string())
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body,
    )
        .into_response()
}

fn parse_object(body: &[u8]) -> Result<serde_json::Map<String, Value>, ApiError> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::bad_request("malformed_body", "body must be a JSON object")),
        Err(e) => Err(ApiError::bad_request("malformed_body", format!("invalid JSON: {e}"))),
    }
}

fn number_field(
    obj: &serde_json::Map<String, Value>,
    name: &str,
    (min, max): (f64, f64),
) -> Result<f64, ApiError> {
    let v = obj
        .get(name)
        .ok_or_else(|| ApiError::bad_request("missing_field", format!("`{name}` is required")).with_field(name))?;
    let x = v.as_f64().ok_or_else(|| {
        ApiError::bad_request("invalid_type", format!("`{name}` must be a number")).with_field(name)
    })?;
    if !(min..=max).contains(&x) {
        return Err(ApiError::bad_request(
            "out_of_range",
            format!("`{name}` = {x} is outside [{min}, {max}]"),
        )
        .with_field(name));
    }
    Ok(x)
}

/// Parses a prediction request, naming the first offending field.
pub fn parse_predict_request(body: &[u8]) -> Result<FeatureVector, ApiError> {
    let obj = parse_object(body)?;
    let temp = number_field(&obj, "temp", TEMP_RANGE)?;
    let rh = number_field(&obj, "rh", RH_RANGE)?;
    let oxy = number_field(&obj, "oxy", OXY_RANGE)?;
    Ok(FeatureVector { temp, rh, oxy })
}

fn parse_reading(body: &[u8]) -> Result<SensorReading, ApiError> {
    let obj = parse_object(body)?;
    let node_id = match obj.get("node_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => {
            return Err(ApiError::bad_request("invalid_type", "`node_id` must be a non-empty string")
                .with_field("node_id"))
        }
        None => {
            return Err(ApiError::bad_request("missing_field", "`node_id` is required").with_field("node_id"))
        }
    };
    let timestamp = match obj.get("ts_ms") {
        Some(v) => v.as_u64().ok_or_else(|| {
            ApiError::bad_request("invalid_type", "`ts_ms` must be a non-negative integer").with_field("ts_ms")
        })?,
        None => return Err(ApiError::bad_request("missing_field", "`ts_ms` is required").with_field("ts_ms")),
    };
    let flame = match obj.get("flame") {
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            return Err(ApiError::bad_request("invalid_type", "`flame` must be a boolean").with_field("flame"))
        }
        None => return Err(ApiError::bad_request("missing_field", "`flame` is required").with_field("flame")),
    };
    Ok(SensorReading {
        node_id,
        timestamp,
        temp: number_field(&obj, "temp", TEMP_RANGE)?,
        rh: number_field(&obj, "rh", RH_RANGE)?,
        oxy: number_field(&obj, "oxy", OXY_RANGE)?,
        flame,
    })
}

fn no_model() -> ApiError {
    ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_model", "no model is loaded")
}

async fn predict(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let model = state.model.clone().ok_or_else(no_model)?;
    let features = parse_predict_request(&body)?;
    Ok(json_response(StatusCode::OK, model.predict(&features).to_json()))
}

async fn model_info(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let model = state.model.as_ref().ok_or_else(no_model)?;
    let body = serde_json::to_string(&model.metadata()).expect("metadata serializes");
    Ok(json_response(StatusCode::OK, body))
}

async fn telemetry(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let reading = parse_reading(&body)?;
    let alerts = {
        let mut edge = state.edge.lock().expect("edge lock");
        let alerts = edge.ingest_or_register(&reading).map_err(|e| match e {
            EdgeError::StaleTimestamp { .. } => {
                ApiError::new(StatusCode::CONFLICT, "stale_timestamp", e.to_string()).with_field("ts_ms")
            }
            EdgeError::InvalidReading { field, .. } => {
                ApiError::bad_request("out_of_range", e.to_string()).with_field(field)
            }
            other => ApiError::bad_request("invalid_reading", other.to_string()),
        })?;
        let mut store = state.store.lock().expect("store lock");
        for a in &alerts {
            if let Err(e) = store.append(a.clone()) {
                log::error!("alert log append failed: {e}");
            }
        }
        alerts
    };
    let n = alerts.len();
    if n > 0 && !state.sinks.is_empty() {
        let sinks = state.sinks.clone();
        tokio::task::spawn_blocking(move || {
            for a in &alerts {
                for s in &sinks {
                    if let Err(e) = s.deliver(a) {
                        log::warn!("{e}");
                    }
                }
            }
        });
    }
    Ok(json_response(
        StatusCode::ACCEPTED,
        json!({ "accepted": true, "alerts": n }).to_string(),
    ))
}

async fn alerts(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let limit = match params.get("limit") {
        None => DEFAULT_PAGE,
        Some(s) => match s.parse::<usize>() {
            Ok(n) if (1..=MAX_PAGE).contains(&n) => n,
            _ => {
                return Err(ApiError::bad_request(
                    "invalid_limit",
                    format!("limit must be an integer in [1, {MAX_PAGE}]"),
                )
                .with_field("limit"))
            }
        },
    };
    let page = state
        .store
        .lock()
        .expect("store lock")
        .page(params.get("after").map(String::as_str), limit)
        .map_err(|m| ApiError::bad_request("invalid_cursor", m).with_field("after"))?;
    Ok(json_response(
        StatusCode::OK,
        serde_json::to_string(&page).expect("page serializes"),
    ))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

fn cors(origin: Option<&str>) -> Result<CorsLayer, ServiceError> {
    let allow = match origin {
        None => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(
            HeaderValue::from_str(o).map_err(|_| ServiceError::CorsOrigin(o.to_string()))?,
        ),
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, ServiceError> {
    Ok(Router::new()
        .route("/api/v1/predict", post(predict))
        .route("/api/v1/telemetry", post(telemetry))
        .route("/api/v1/alerts", get(alerts))
        .route("/api/v1/model", get(model_info))
        .fallback(not_found)
        .with_state(state)
        .layer(cors(cors_origin)?))
}

fn load_state(config: &mut ServiceConfig) -> Result<AppState, ServiceError> {
    let model = match &config.model {
        Some(p) if p.exists() => Some(LoadedModel::load(p)?),
        Some(p) => {
            log::warn!("model {} not found; predictions will answer 503", p.display());
            None
        }
        None => None,
    };
    let store = match &config.alert_log {
        Some(p) => AlertStore::open(p)?,
        None => AlertStore::in_memory(),
    };
    Ok(AppState::new(
        model,
        store,
        config.threshold,
        std::mem::take(&mut config.sinks),
    ))
}

/// A service running on its own thread. Dropping it shuts the server down.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<std::io::Result<()>>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn runtime() -> std::io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()
}

/// Binds and serves on a background thread. Port 0 picks a free port.
pub fn spawn(mut config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let state = Arc::new(load_state(&mut config)?);
    let app = router(state, config.cors_origin.as_deref())?;
    let bind = format!("{}:{}", config.addr, config.port);
    let std_listener = std::net::TcpListener::bind(&bind).map_err(|source| ServiceError::Bind {
        addr: bind.clone(),
        source,
    })?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = thread::spawn(move || {
        runtime()?.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener)?;
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(ServiceHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Binds and serves on the current thread until Ctrl-C.
pub fn run(mut config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(load_state(&mut config)?);
    let app = router(state, config.cors_origin.as_deref())?;
    let bind = format!("{}:{}", config.addr, config.port);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|source| ServiceError::Bind {
                addr: bind.clone(),
                source,
            })?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
