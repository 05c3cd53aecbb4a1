use axum::body::Bytes;
use axum::extract::multipart::{Multipart, MultipartError};
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use corebox::depthref::{adjust_depths, contiguity_warnings, parse_depth_filename, reference_columns, DepthAssignment, DepthEdit, DepthSpec};
use corebox::export::build_archive;
use corebox::extraction::{run_pipeline, ExtractionReport, FilterConfig};
use corebox::imagery::{self, LabelMap};
use serde::{Deserialize, Serialize};

use crate::session::{now, Session, SessionInfo, SharedSession};
use crate::AppState;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message.to_string())
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message.to_string())
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        Self::new(e.status(), e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn lookup(state: &AppState, id: &str) -> ApiResult<SharedSession> {
    state.workspace.get(id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
}

fn persist(state: &AppState, session: &Session) -> ApiResult<()> {
    state.workspace.persist(session).map_err(ApiError::internal)
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

pub async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub async fn index() -> &'static str {
    "corebox service: POST /sessions to begin\n"
}

#[derive(Serialize)]
pub struct Created {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub depth_spec: Option<DepthSpec>,
}

/// Multipart fields: `image` (required), `mask`, `labels` (JSON), `config`
/// (filter JSON). Depths are taken from the image file name when it follows
/// `<name>_<top>-<bottom>m.<ext>`.
pub async fn create_session(State(state): State<AppState>, mut multipart: Multipart) -> ApiResult<(StatusCode, Json<Created>)> {
    let (mut image, mut mask, mut labels, mut config, mut file_name) = (None, None, None, None, None);
    while let Some(field) = multipart.next_field().await? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "image" => {
                file_name = field.file_name().map(str::to_string);
                image = Some(field.bytes().await?);
            }
            "mask" => mask = Some(field.bytes().await?),
            "labels" => labels = Some(field.text().await?),
            "config" => config = Some(field.text().await?),
            other => return Err(ApiError::bad_request(format!("unexpected field {other:?}"))),
        }
    }
    let image = image.ok_or_else(|| ApiError::bad_request("missing image field"))?;
    let labels = match labels {
        Some(text) => LabelMap::from_json_str(&text).map_err(ApiError::bad_request)?,
        None => LabelMap::core_column(),
    };
    let config = match config {
        Some(text) => FilterConfig::from_json_str(&text).map_err(ApiError::bad_request)?,
        None => FilterConfig::default(),
    };
    let (image, mask) = {
        let labels = labels.clone();
        tokio::task::spawn_blocking(move || {
            let image = imagery::decode_image(&image)?;
            let mask = mask.map(|m| imagery::decode_mask(&m, &labels)).transpose()?;
            Ok::<_, imagery::ImageryError>((image, mask))
        })
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::bad_request)?
    };
    let mut session = Session::new(image, mask, labels).map_err(ApiError::bad_request)?;
    session.config = config;
    session.depth_spec = file_name.as_deref().and_then(parse_depth_filename).map(|(top, bottom)| DepthSpec::new(top, bottom));
    session.source_name = file_name;
    let created = Created {
        id: session.id.clone(),
        width: session.image.width(),
        height: session.image.height(),
        depth_spec: session.depth_spec,
    };
    state.workspace.insert(session).map_err(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(created)))
}

pub async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let session = lookup(&state, &id)?;
    let info = session.lock().await.info();
    Ok(Json(info))
}

pub async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    if state.workspace.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

pub async fn get_image(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let image = lookup(&state, &id)?.lock().await.image.clone();
    let bytes = tokio::task::spawn_blocking(move || imagery::encode_image_png(&image))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    Ok(png(bytes))
}

pub async fn get_mask(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let mask = lookup(&state, &id)?.lock().await.mask.clone();
    let bytes = imagery::encode_mask_png(&mask).map_err(ApiError::internal)?;
    Ok(png(bytes))
}

/// Accepts the mask PNG either as a raw body or as multipart field `mask`.
async fn mask_bytes(state: &AppState, headers: &HeaderMap, request: Request) -> ApiResult<Bytes> {
    let is_multipart = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if is_multipart {
        let mut multipart = Multipart::from_request(request, state).await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        while let Some(field) = multipart.next_field().await? {
            if field.name() == Some("mask") {
                return Ok(field.bytes().await?);
            }
        }
        Err(ApiError::bad_request("missing mask field"))
    } else {
        Bytes::from_request(request, state).await.map_err(|e| ApiError::new(e.status(), e.body_text()))
    }
}

pub async fn put_mask(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    request: Request,
) -> ApiResult<Json<SessionInfo>> {
    let shared = lookup(&state, &id)?;
    let bytes = mask_bytes(&state, &headers, request).await?;
    let mut session = shared.lock().await;
    let mask = imagery::decode_mask(&bytes, &session.labels).map_err(ApiError::bad_request)?;
    session.replace_mask(mask).map_err(ApiError::bad_request)?;
    persist(&state, &session)?;
    Ok(Json(session.info()))
}

/// Body: optional filter config JSON. An empty body reuses the session's
/// current config.
pub async fn extract(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<ExtractionReport>> {
    let shared = lookup(&state, &id)?;
    let mut session = shared.lock().await;
    let config = if body.iter().all(u8::is_ascii_whitespace) {
        session.config.clone()
    } else {
        let text = std::str::from_utf8(&body).map_err(ApiError::bad_request)?;
        FilterConfig::from_json_str(text).map_err(ApiError::bad_request)?
    };
    let (image, mask, labels) = (session.image.clone(), session.mask.clone(), session.labels.clone());
    let run_config = config.clone();
    let (report, crops) = tokio::task::spawn_blocking(move || run_pipeline(&image, &mask, &labels, &run_config))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::bad_request)?;
    session.config = config;
    session.depths = match session.depth_spec {
        Some(spec) if !report.kept.is_empty() => reference_columns(&report.kept, &spec).ok(),
        _ => None,
    };
    session.report = Some(report.clone());
    session.crops = crops;
    session.modified = now();
    persist(&state, &session)?;
    Ok(Json(report))
}

/// Either `{"spec": DepthSpec}` to (re)assign all intervals or
/// `{"edits": [DepthEdit]}` to adjust existing ones.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthRequest {
    #[serde(default)]
    pub spec: Option<DepthSpec>,
    #[serde(default)]
    pub edits: Option<Vec<DepthEdit>>,
}

pub async fn put_depths(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<DepthAssignment>> {
    let shared = lookup(&state, &id)?;
    let request: DepthRequest = serde_json::from_slice(&body).map_err(ApiError::bad_request)?;
    let mut session = shared.lock().await;
    let Some(report) = &session.report else {
        return Err(ApiError::new(StatusCode::CONFLICT, "run extraction before assigning depths"));
    };
    let assignment = match (request.spec, request.edits) {
        (Some(spec), None) => {
            let mut a = reference_columns(&report.kept, &spec).map_err(ApiError::bad_request)?;
            let mut by_depth = a.intervals.clone();
            by_depth.sort_by(|x, y| x.from.total_cmp(&y.from));
            a.warnings.extend(contiguity_warnings(&by_depth));
            session.depth_spec = Some(spec);
            a
        }
        (None, Some(edits)) => {
            let Some(current) = &session.depths else {
                return Err(ApiError::new(StatusCode::CONFLICT, "assign depths with a spec before editing them"));
            };
            adjust_depths(&current.intervals, &edits).map_err(ApiError::bad_request)?
        }
        _ => return Err(ApiError::bad_request("body must contain exactly one of \"spec\" or \"edits\"")),
    };
    session.depths = Some(assignment.clone());
    session.modified = now();
    persist(&state, &session)?;
    Ok(Json(assignment))
}

pub async fn export(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let shared = lookup(&state, &id)?;
    let session = shared.lock().await;
    let Some(report) = session.report.clone() else {
        return Err(ApiError::new(StatusCode::CONFLICT, "run extraction before exporting"));
    };
    let crops = session.crops.clone();
    let intervals = session.depths.as_ref().map(|d| d.intervals.clone());
    let mask = session.mask.clone();
    drop(session);
    let archive = tokio::task::spawn_blocking(move || build_archive(&report, &crops, intervals.as_deref(), &mask))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{id}.zip\"")),
        ],
        archive,
    )
        .into_response())
}
