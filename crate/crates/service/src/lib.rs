//! Session-oriented HTTP service for interactive template design.
//!
//! All routes live under `/v1`:
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | `POST` | `/sessions` | STL bytes | session id and mesh summary |
//! | `GET` | `/sessions/{id}` | | summary and current contour |
//! | `DELETE` | `/sessions/{id}` | | `204` |
//! | `POST` | `/sessions/{id}/points` | [`PointOp`] | [`ContourView`] |
//! | `POST` | `/sessions/{id}/preview-inner` | | inner surface payload |
//! | `POST` | `/sessions/{id}/generate` | [`GenerateRequest`] | template payload and timings |
//! | `GET` | `/sessions/{id}/template.stl` | | binary STL |
//!
//! Meshes travel as base64 [`payload`] strings. Failures reply with a JSON
//! [`ErrorBody`].

pub mod payload;

use std::collections::HashMap;
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guidesmith::contour::{
    default_density, project_to_surface, resample_spline, validate_loop, ControlPointSet, ContourLoop,
};
use guidesmith::mesh::{mesh_from_stl, write_stl_binary, DEFAULT_WELD_EPSILON};
use guidesmith::pipeline::{generate_template, prepare_contour, PipelineError, TemplateParams};
use guidesmith::segmentation::{segment, SegmentationResult};
use guidesmith::tube::DrillAxis;
use guidesmith::{Point3, TriangleMesh, Vec3};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::CorsLayer;
use uuid::Uuid;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(3600);
/// Uploads up to 1 GiB, enough for multi-million-triangle STL files.
pub const MAX_UPLOAD_BYTES: usize = 1 << 30;

type Xyz = [f64; 3];

fn xyz(p: &Point3) -> Xyz {
    [p.x, p.y, p.z]
}

fn point(a: Xyz) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Points to highlight, such as contour samples next to a hole.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub geometry: Vec<Xyz>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), stage: None, warnings: Vec::new(), geometry: Vec::new() } }
    }

    fn unprocessable(error: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error.to_string())
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session {id}"))
    }

    fn internal(error: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, error.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let mut api = ApiError::unprocessable(&e);
        api.body.stage = e.stage().map(|s| s.name().to_owned());
        if let PipelineError::Validation { messages, offending } = e {
            api.body.warnings = messages;
            api.body.geometry = offending.iter().map(xyz).collect();
        }
        api
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Session {
    mesh: Arc<TriangleMesh>,
    /// Control points snapped to the surface.
    controls: Vec<Point3>,
    /// Bumped on every control point change.
    revision: u64,
    /// Inner region for `revision`, if previewed.
    inner: Option<(u64, Arc<SegmentationResult>)>,
    template: Option<Arc<Vec<u8>>>,
}

struct Entry {
    session: Arc<Mutex<Session>>,
    touched: Instant,
}

/// In-memory session store with idle expiry.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<StdMutex<HashMap<Uuid, Entry>>>,
    ttl: Duration,
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(DEFAULT_SESSION_TTL)
    }
}

impl AppState {
    pub fn new(ttl: Duration) -> Self {
        AppState { sessions: Arc::default(), ttl }
    }

    /// Drops sessions idle for longer than the time-to-live.
    pub fn expire(&self) -> usize {
        let mut map = self.sessions.lock().expect("session map lock");
        let before = map.len();
        let ttl = self.ttl;
        map.retain(|_, e| e.touched.elapsed() <= ttl);
        before - map.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map lock").len()
    }

    fn insert(&self, session: Session) -> Uuid {
        self.expire();
        let id = Uuid::new_v4();
        let entry = Entry { session: Arc::new(Mutex::new(session)), touched: Instant::now() };
        self.sessions.lock().expect("session map lock").insert(id, entry);
        id
    }

    fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.expire();
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        let mut map = self.sessions.lock().expect("session map lock");
        let entry = map.get_mut(&uuid).ok_or_else(|| ApiError::not_found(id))?;
        entry.touched = Instant::now();
        Ok(entry.session.clone())
    }
}

pub fn app(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(session_summary).delete(delete_session))
        .route("/v1/sessions/{id}/points", post(update_points))
        .route("/v1/sessions/{id}/preview-inner", post(preview_inner))
        .route("/v1/sessions/{id}/generate", post(generate))
        .route("/v1/sessions/{id}/template.stl", get(download_stl))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Bounds {
    pub min: Xyz,
    pub max: Xyz,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub bounds: Bounds,
}

impl MeshSummary {
    fn of(mesh: &TriangleMesh) -> Self {
        let b = mesh.bounds();
        MeshSummary { vertices: mesh.vertex_count(), triangles: mesh.triangle_count(), bounds: Bounds { min: xyz(&b.min), max: xyz(&b.max) } }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionCreated {
    pub id: String,
    pub mesh: MeshSummary,
}

async fn create_session(State(state): State<AppState>, body: axum::body::Bytes) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let mesh = blocking(move || mesh_from_stl(&body, DEFAULT_WELD_EPSILON)).await?.map_err(ApiError::unprocessable)?;
    if mesh.is_empty() {
        return Err(ApiError::unprocessable("mesh has no triangles"));
    }
    let summary = MeshSummary::of(&mesh);
    let id = state.insert(Session { mesh: Arc::new(mesh), controls: Vec::new(), revision: 0, inner: None, template: None });
    Ok((StatusCode::CREATED, Json(SessionCreated { id: id.to_string(), mesh: summary })))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionView {
    pub mesh: MeshSummary,
    pub controls: Vec<Xyz>,
    pub has_template: bool,
}

async fn session_summary(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = state.get(&id)?;
    let s = session.lock().await;
    Ok(Json(SessionView { mesh: MeshSummary::of(&s.mesh), controls: s.controls.iter().map(xyz).collect(), has_template: s.template.is_some() }))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let uuid = Uuid::parse_str(&id).map_err(|_| ApiError::not_found(&id))?;
    match state.sessions.lock().expect("session map lock").remove(&uuid) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(&id)),
    }
}

/// An edit to the control points.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum PointOp {
    Add { point: Xyz },
    Move { index: usize, point: Xyz },
    Delete { index: usize },
    /// Replaces every control point.
    Set { points: Vec<Xyz> },
}

/// The contour after an edit. With fewer than three controls `polyline` is
/// the open chain through them.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContourView {
    pub controls: Vec<Xyz>,
    pub closed: bool,
    pub polyline: Vec<Xyz>,
    pub warnings: Vec<String>,
}

fn contour_view(mesh: &TriangleMesh, controls: &[Point3]) -> ApiResult<ContourView> {
    let mut view = ContourView { controls: controls.iter().map(xyz).collect(), closed: false, polyline: Vec::new(), warnings: Vec::new() };
    if controls.len() < 3 {
        view.polyline = view.controls.clone();
        return Ok(view);
    }
    let samples = resample_spline(controls, default_density(mesh)).map_err(ApiError::unprocessable)?;
    let projected: ContourLoop = project_to_surface(&samples, mesh, None).map_err(ApiError::unprocessable)?;
    view.warnings = validate_loop(&projected, mesh).messages();
    view.closed = true;
    view.polyline = projected.points.iter().map(xyz).collect();
    Ok(view)
}

async fn update_points(State(state): State<AppState>, Path(id): Path<String>, Json(op): Json<PointOp>) -> ApiResult<Json<ContourView>> {
    let session = state.get(&id)?;
    let mut s = session.lock().await;
    let bad_index = |i: usize, n: usize| ApiError::unprocessable(format!("control point index {i} out of range for {n} points"));
    let mut controls = s.controls.clone();
    let snap = |pts: Vec<Point3>, mesh: &TriangleMesh| ControlPointSet::attach(pts, mesh).map(|c| c.surface).map_err(ApiError::unprocessable);
    match op {
        PointOp::Add { point: p } => controls.push(snap(vec![point(p)], &s.mesh)?[0]),
        PointOp::Move { index, point: p } => {
            let n = controls.len();
            *controls.get_mut(index).ok_or_else(|| bad_index(index, n))? = snap(vec![point(p)], &s.mesh)?[0];
        }
        PointOp::Delete { index } => {
            if index >= controls.len() {
                return Err(bad_index(index, controls.len()));
            }
            controls.remove(index);
        }
        PointOp::Set { points } => controls = snap(points.into_iter().map(point).collect(), &s.mesh)?,
    }
    let mesh = s.mesh.clone();
    let pts = controls.clone();
    let view = blocking(move || contour_view(&mesh, &pts)).await??;
    s.controls = controls;
    s.revision += 1;
    s.inner = None;
    s.template = None;
    Ok(Json(view))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshReply {
    /// Base64 [`payload`] bytes.
    pub mesh: String,
    pub vertices: usize,
    pub triangles: usize,
}

impl MeshReply {
    fn of(mesh: &TriangleMesh) -> Self {
        MeshReply { mesh: payload::encode_mesh_base64(mesh), vertices: mesh.vertex_count(), triangles: mesh.triangle_count() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InnerPreview {
    #[serde(flatten)]
    pub mesh: MeshReply,
    pub boundary: Vec<Xyz>,
    /// Revision of the control points this region was cut with.
    pub revision: u64,
}

/// Optional side selection for the cut.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct PreviewRequest {
    #[serde(default)]
    pub seed: Option<Xyz>,
}

async fn preview_inner(State(state): State<AppState>, Path(id): Path<String>, body: axum::body::Bytes) -> ApiResult<Json<InnerPreview>> {
    let req: PreviewRequest = if body.is_empty() { PreviewRequest::default() } else { serde_json::from_slice(&body).map_err(ApiError::unprocessable)? };
    let session = state.get(&id)?;
    let mut s = session.lock().await;
    if s.controls.len() < 3 {
        return Err(ApiError::unprocessable(format!("a closed contour needs at least 3 control points, have {}", s.controls.len())));
    }
    let revision = s.revision;
    let inner = match (&s.inner, req.seed) {
        (Some((rev, inner)), None) if *rev == revision => inner.clone(),
        _ => {
            let mesh = s.mesh.clone();
            let controls = s.controls.clone();
            let seed = req.seed.map(point);
            let inner = blocking(move || -> Result<SegmentationResult, PipelineError> {
                let contour = prepare_contour(&mesh, &controls)?;
                segment(&mesh, &contour, seed).map_err(|source| PipelineError::Segmentation {
                    stage: guidesmith::pipeline::Stage::InnerSegmentation,
                    source,
                })
            })
            .await??;
            let inner = Arc::new(inner);
            s.inner = Some((revision, inner.clone()));
            inner
        }
    };
    Ok(Json(InnerPreview {
        mesh: MeshReply::of(&inner.region),
        boundary: inner.boundary.points(&inner.region).iter().map(xyz).collect(),
        revision,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AxisSpec {
    pub entry: Xyz,
    pub direction: Xyz,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenerateRequest {
    pub thickness: f64,
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub sampling_step: Option<usize>,
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default)]
    pub k_neighbors: Option<usize>,
    #[serde(default)]
    pub segments: Option<usize>,
    #[serde(default)]
    pub seed: Option<Xyz>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TemplateReply {
    #[serde(flatten)]
    pub mesh: MeshReply,
    pub timings: Vec<StageTime>,
}

async fn generate(State(state): State<AppState>, Path(id): Path<String>, Json(req): Json<GenerateRequest>) -> ApiResult<Json<TemplateReply>> {
    if !(req.thickness > 0.0 && req.thickness.is_finite()) {
        return Err(ApiError::unprocessable(format!("thickness must be positive, got {}", req.thickness)));
    }
    let session = state.get(&id)?;
    let mut s = session.lock().await;
    let defaults = TemplateParams::new(req.thickness);
    let params = TemplateParams {
        sampling_step: req.sampling_step.unwrap_or(defaults.sampling_step),
        spacing: req.spacing,
        k_neighbors: req.k_neighbors.unwrap_or(defaults.k_neighbors),
        tube_segments: req.segments.unwrap_or(defaults.tube_segments),
        seed: req.seed.map(point),
        ..defaults
    };
    let axes: Vec<DrillAxis> = req
        .axes
        .iter()
        .map(|a| DrillAxis {
            entry: point(a.entry),
            direction: Vec3::new(a.direction[0], a.direction[1], a.direction[2]),
            inner_radius: a.inner_radius,
            outer_radius: a.outer_radius,
            length: a.length,
        })
        .collect();
    let (mesh, controls) = (s.mesh.clone(), s.controls.clone());
    let template = blocking(move || generate_template(&mesh, &controls, &params, &axes)).await??;
    let mut stl = Vec::new();
    write_stl_binary(&template.mesh, &mut stl).map_err(ApiError::internal)?;
    s.template = Some(Arc::new(stl));
    let timings = template.timings.rows().into_iter().map(|(st, d)| StageTime { stage: st.name().to_owned(), seconds: d.as_secs_f64() }).collect();
    Ok(Json(TemplateReply { mesh: MeshReply::of(&template.mesh), timings }))
}

async fn download_stl(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.get(&id)?;
    let s = session.lock().await;
    let stl = s.template.clone().ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no template generated for this session"))?;
    Ok((
        [(header::CONTENT_TYPE, "model/stl"), (header::CONTENT_DISPOSITION, "attachment; filename=\"template.stl\"")],
        stl.as_ref().clone(),
    )
        .into_response())
}
