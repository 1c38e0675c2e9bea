use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use corpusdedup::dedup::VerifyMode;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::catalog::Catalog;
use crate::server::AppState;

/// Longest text preview returned per match, in characters.
pub const PREVIEW_CHARS: usize = 500;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRequest {
    pub text: String,
    pub dataset: String,
    /// May be omitted when the dataset has a single threshold.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub verify: Option<VerifyMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceInfo {
    pub project: String,
    pub file_path: String,
    pub start_line: u32,
    pub end_line: u32,
    /// `project/file:start-end`
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchInfo {
    pub id: u64,
    pub similarity: Option<f64>,
    pub provenance: Option<ProvenanceInfo>,
    pub preview: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResponse {
    pub matches: Vec<MatchInfo>,
    pub threshold: f64,
    pub verify: VerifyMode,
    pub parts_consulted: u32,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub thresholds: Vec<f64>,
    pub doc_count: u64,
    pub part_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub loaded_shards: usize,
    pub uptime_seconds: u64,
}

pub(crate) struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn catalog(state: &AppState) -> Result<Arc<Catalog>, ApiError> {
    state.catalog().ok_or_else(|| ApiError(StatusCode::SERVICE_UNAVAILABLE, state.load_status()))
}

fn parse_request(state: &AppState, body: &[u8]) -> Result<CheckRequest, ApiError> {
    // JSON escaping can at most sextuple a character, plus room for the other fields.
    if body.len() > state.config().max_document_bytes.saturating_mul(6).saturating_add(64 * 1024) {
        return Err(bad_request("request body too large"));
    }
    if let Err(e) = std::str::from_utf8(body) {
        return Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, format!("body is not valid UTF-8: {e}")));
    }
    let req: CheckRequest = serde_json::from_slice(body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        _ => bad_request(format!("malformed JSON: {e}")),
    })?;
    if req.text.len() > state.config().max_document_bytes {
        return Err(bad_request(format!("text exceeds {} bytes", state.config().max_document_bytes)));
    }
    Ok(req)
}

pub(crate) async fn check(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<CheckResponse>, ApiError> {
    let started = Instant::now();
    let req = parse_request(&state, &body)?;
    let catalog = catalog(&state)?;
    let entry = catalog.datasets.get(&req.dataset).ok_or_else(|| bad_request(format!("unknown dataset {:?}", req.dataset)))?;
    let threshold = match req.threshold {
        Some(t) => t,
        None if entry.indexes.len() == 1 => entry.indexes[0].threshold(),
        None => return Err(bad_request(format!("threshold required; {} offers {:?}", entry.name, entry.thresholds()))),
    };
    if entry.index(threshold).is_none() {
        return Err(bad_request(format!("dataset {} has no index at threshold {threshold}; available {:?}", entry.name, entry.thresholds())));
    }
    let verify = req.verify.unwrap_or_default();
    if verify == VerifyMode::Exact && entry.store.is_none() {
        return Err(bad_request(format!("exact verification needs the corpus store of {}", entry.name)));
    }

    let timeout = Duration::from_millis(state.config().request_timeout_ms);
    let name = req.dataset.clone();
    let work = tokio::task::spawn_blocking(move || {
        let entry = &catalog.datasets[&name];
        let index = entry.index(threshold).expect("checked above");
        let store = entry.store.as_deref();
        let scored = index.check(&req.text, verify, store)?;
        let matches = scored
            .into_iter()
            .map(|s| {
                let doc = store.and_then(|st| st.get(s.id));
                MatchInfo {
                    id: s.id.0,
                    similarity: s.similarity,
                    provenance: doc.map(|d| {
                        let p = &d.provenance;
                        ProvenanceInfo {
                            project: p.project.clone(),
                            file_path: p.file_path.clone(),
                            start_line: p.start_line,
                            end_line: p.end_line,
                            display: p.to_string(),
                        }
                    }),
                    preview: doc.map(|d| d.text.chars().take(PREVIEW_CHARS).collect()),
                }
            })
            .collect();
        Ok::<_, corpusdedup::dedup::DedupError>((matches, index.threshold(), index.parts.len() as u32))
    });
    let (matches, threshold, parts) = match tokio::time::timeout(timeout, work).await {
        Err(_) => return Err(ApiError(StatusCode::GATEWAY_TIMEOUT, "check timed out".into())),
        Ok(Err(join)) => return Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, join.to_string())),
        Ok(Ok(Err(e))) => return Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        Ok(Ok(Ok(v))) => v,
    };
    Ok(Json(CheckResponse { matches, threshold, verify, parts_consulted: parts, elapsed_ms: started.elapsed().as_secs_f64() * 1000.0 }))
}

pub(crate) fn dataset_infos(catalog: &Catalog) -> Vec<DatasetInfo> {
    catalog
        .datasets
        .values()
        .map(|d| DatasetInfo { name: d.name.clone(), thresholds: d.thresholds(), doc_count: d.doc_count(), part_count: d.part_count() })
        .collect()
}

pub(crate) async fn datasets(State(state): State<Arc<AppState>>) -> Result<Json<Vec<DatasetInfo>>, ApiError> {
    let catalog = catalog(&state)?;
    Ok(Json(dataset_infos(&catalog)))
}

pub(crate) async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let (status, loaded_shards) = match state.catalog() {
        Some(c) => ("ok".to_string(), c.shard_count()),
        None => (if state.load_failed() { "error" } else { "loading" }.to_string(), state.progress()),
    };
    Json(Health { status, loaded_shards, uptime_seconds: state.uptime().as_secs() })
}

pub(crate) async fn reload(State(state): State<Arc<AppState>>) -> Result<Json<Vec<DatasetInfo>>, ApiError> {
    let st = state.clone();
    match tokio::task::spawn_blocking(move || st.reload()).await {
        Ok(Ok(catalog)) => Ok(Json(dataset_infos(&catalog))),
        Ok(Err(e)) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}
