//! JSON over HTTP. Every handler runs its store work on the blocking pool.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use statlink_core::catalog::{CatalogEntry, CatalogError};
use statlink_core::dashboard::{
    Dashboard, DashboardError, DashboardView, RuleEndpoint, SelectionDelta, SlicePayload, VizConfig, VizSource,
    VizType,
};
use statlink_core::link::{HighlightSet, ItemRef, LinkError, LinkRule, UserViz, UserVizEntry, UserVizKind};
use statlink_core::{slice, AreaKey, DimensionSpec, ModelError, Provider, SeriesSet, TimeKey};

use crate::{build_selection, AppState};

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error, message: message.into() } }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(self.body)).into_response()
    }
}

impl From<DashboardError> for ApiError {
    fn from(e: DashboardError) -> Self {
        use DashboardError::*;
        let message = e.to_string();
        let (status, kind) = match &e {
            UnknownDashboard(_) => (StatusCode::NOT_FOUND, "unknown_dashboard"),
            UnknownCube(_) => (StatusCode::NOT_FOUND, "unknown_cube"),
            UnknownUserViz(_) => (StatusCode::NOT_FOUND, "unknown_user_viz"),
            UnknownViz(_) => (StatusCode::NOT_FOUND, "unknown_viz"),
            Link(LinkError::UnknownItem { .. }) => (StatusCode::NOT_FOUND, "unknown_item"),
            SameViz(_) => (StatusCode::BAD_REQUEST, "same_viz"),
            IncompatibleVizType { .. } => (StatusCode::BAD_REQUEST, "incompatible_viz_type"),
            Conflict { .. } => (StatusCode::CONFLICT, "conflict"),
            Validation(_) => (StatusCode::BAD_REQUEST, "validation"),
            Model(m) => return ApiError::from(m.clone()),
            Catalog(_) | StorageFailure { .. } => {
                log::error!("{message}");
                (StatusCode::INTERNAL_SERVER_ERROR, "storage_failure")
            }
        };
        ApiError::new(status, kind, message)
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        DashboardError::from(e).into()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let kind = match &e {
            ModelError::UnknownArea(_) => "unknown_area",
            ModelError::UnknownDimensionMember { .. } => "unknown_dimension_member",
            ModelError::EmptyTimeRange { .. } => "empty_time_range",
            _ => "invalid",
        };
        ApiError::new(StatusCode::BAD_REQUEST, kind, e.to_string())
    }
}

impl From<LinkError> for ApiError {
    fn from(e: LinkError) -> Self {
        DashboardError::from(e).into()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

/// `axum::Json` with rejections reported in the API's error shape.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Json<T>(pub T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/datasets", get(list_datasets))
        .route("/api/datasets/{cube_id}", get(dataset_meta))
        .route("/api/datasets/{cube_id}/slice", get(dataset_slice))
        .route("/api/dashboards", get(list_dashboards).post(create_dashboard))
        .route("/api/dashboards/{id}", get(get_dashboard))
        .route("/api/dashboards/{id}/visualizations", post(add_visualization))
        .route("/api/dashboards/{id}/visualizations/{viz_id}", get(viz_payload).patch(update_visualization))
        .route("/api/dashboards/{id}/rules", post(add_rule))
        .route("/api/dashboards/{id}/resolve", post(resolve))
        .route("/api/uservisualizations", post(create_user_viz))
        .route("/api/uservisualizations/{id}", get(get_user_viz))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .with_state(Arc::new(state))
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Deserialize)]
struct DatasetQuery {
    provider: Option<String>,
    q: Option<String>,
}

async fn list_datasets(State(state): Shared, query: Result<Query<DatasetQuery>, QueryRejection>) -> ApiResult<Vec<CatalogEntry>> {
    let Query(query) = query?;
    let provider = match query.provider.as_deref().filter(|p| !p.is_empty()) {
        Some(p) => Some(p.parse::<Provider>()?),
        None => None,
    };
    Ok(Json(state.catalog.query(provider, query.q.as_deref())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeMeta {
    #[serde(flatten)]
    pub entry: CatalogEntry,
    pub dimensions: Vec<DimensionSpec>,
    pub areas: Vec<AreaKey>,
    pub times: Vec<TimeKey>,
}

async fn dataset_meta(State(state): Shared, Path(cube_id): Path<String>) -> ApiResult<CubeMeta> {
    blocking(move || {
        let entry = state.catalog.get(&cube_id).ok_or_else(|| CatalogError::UnknownCube(cube_id.clone()))?;
        let cube = state.catalog.load_cube(&cube_id)?;
        Ok(Json(CubeMeta {
            entry,
            dimensions: cube.dimensions().to_vec(),
            areas: cube.areas().to_vec(),
            times: cube.times().to_vec(),
        }))
    })
    .await
}

/// `areas` is comma separated; `dim.<name>=<member>` fixes a dimension.
async fn dataset_slice(
    State(state): Shared,
    Path(cube_id): Path<String>,
    query: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<SeriesSet> {
    let Query(params) = query?;
    blocking(move || {
        let cube = state.catalog.load_cube(&cube_id)?;
        let mut areas = Vec::new();
        let (mut from, mut to, mut dims) = (None, None, Vec::new());
        for (key, value) in &params {
            match key.as_str() {
                "areas" => areas.extend(value.split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from)),
                "from" => from = Some(value.as_str()),
                "to" => to = Some(value.as_str()),
                other => match other.strip_prefix("dim.") {
                    Some(name) => dims.push((name.to_string(), value.clone())),
                    None => return Err(ApiError::bad_request(format!("unknown parameter `{other}`"))),
                },
            }
        }
        let sel = build_selection(&cube, &areas, from, to, &dims)?;
        Ok(Json(slice(&cube, &sel)?))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct CreateDashboard {
    title: String,
}

async fn create_dashboard(State(state): Shared, Json(body): Json<CreateDashboard>) -> Result<(StatusCode, Json<Dashboard>), ApiError> {
    blocking(move || {
        let snap = state.store.create_dashboard(&body.title)?;
        Ok((StatusCode::CREATED, Json(snap.dashboard.clone())))
    })
    .await
}

async fn list_dashboards(State(state): Shared) -> ApiResult<Vec<Dashboard>> {
    Ok(Json(state.store.list().iter().map(|s| s.dashboard.clone()).collect()))
}

async fn get_dashboard(State(state): Shared, Path(id): Path<String>) -> ApiResult<DashboardView> {
    Ok(Json(state.store.get(&id)?.view()))
}

#[derive(Debug, Deserialize)]
struct AddVisualization {
    cube_id: Option<String>,
    user_viz_id: Option<String>,
    viz_type: Option<VizType>,
    expected_revision: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VizMutation {
    pub viz: VizConfig,
    #[serde(flatten)]
    pub view: DashboardView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleMutation {
    pub rule: LinkRule,
    #[serde(flatten)]
    pub view: DashboardView,
}

async fn add_visualization(
    State(state): Shared,
    Path(id): Path<String>,
    Json(body): Json<AddVisualization>,
) -> Result<(StatusCode, Json<VizMutation>), ApiError> {
    let source = match (body.cube_id, body.user_viz_id) {
        (Some(c), None) => VizSource::Cube(c),
        (None, Some(u)) => VizSource::User(u),
        _ => return Err(ApiError::bad_request("exactly one of cube_id and user_viz_id is required")),
    };
    blocking(move || {
        let (viz, snap) = state.store.add_visualization(&id, source, body.viz_type, body.expected_revision)?;
        Ok((StatusCode::CREATED, Json(VizMutation { viz, view: snap.view() })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct UpdateVisualization {
    #[serde(flatten)]
    delta: SelectionDelta,
    expected_revision: Option<u64>,
}

async fn update_visualization(
    State(state): Shared,
    Path((id, viz_id)): Path<(String, String)>,
    Json(body): Json<UpdateVisualization>,
) -> ApiResult<VizMutation> {
    blocking(move || {
        let (viz, snap) = state.store.update_selection(&id, &viz_id, &body.delta, body.expected_revision)?;
        Ok(Json(VizMutation { viz, view: snap.view() }))
    })
    .await
}

async fn viz_payload(State(state): Shared, Path((id, viz_id)): Path<(String, String)>) -> ApiResult<SlicePayload> {
    blocking(move || Ok(Json(state.store.slice_payload(&id, &viz_id)?))).await
}

#[derive(Debug, Deserialize)]
struct AddRule {
    from: RuleEndpoint,
    to: RuleEndpoint,
    expected_revision: Option<u64>,
}

async fn add_rule(
    State(state): Shared,
    Path(id): Path<String>,
    Json(body): Json<AddRule>,
) -> Result<(StatusCode, Json<RuleMutation>), ApiError> {
    blocking(move || {
        let before = state.store.get(&id)?.dashboard.revision;
        let (rule, snap) = state.store.add_manual_rule(&id, &body.from, &body.to, body.expected_revision)?;
        let status = if snap.dashboard.revision == before { StatusCode::OK } else { StatusCode::CREATED };
        Ok((status, Json(RuleMutation { rule, view: snap.view() })))
    })
    .await
}

async fn resolve(State(state): Shared, Path(id): Path<String>, Json(anchor): Json<ItemRef>) -> ApiResult<HighlightSet> {
    Ok(Json(state.store.resolve(&id, &anchor)?))
}

#[derive(Debug, Deserialize)]
struct CreateUserViz {
    kind: UserVizKind,
    items: Vec<UserVizEntry>,
}

async fn create_user_viz(State(state): Shared, Json(body): Json<CreateUserViz>) -> Result<(StatusCode, Json<UserViz>), ApiError> {
    blocking(move || Ok((StatusCode::CREATED, Json(state.store.create_user_viz(body.kind, body.items)?)))).await
}

async fn get_user_viz(State(state): Shared, Path(id): Path<String>) -> ApiResult<UserViz> {
    Ok(Json(state.store.get_user_viz(&id)?))
}
