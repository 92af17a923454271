//! JSON over HTTP for one loaded project.
//!
//! The project snapshot is read-only for the lifetime of the process.
//! Route planning and rendering run on a bounded pool of blocking workers;
//! requests that exceed the timeout cancel their route planning.

mod error;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{FromRequest, FromRequestParts, Multipart, Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};
use videomap_core::extensions::{self, SemanticDistrictSet};
use videomap_core::ingest::Resolution;
use videomap_core::lens::{LensId, LensRegistry, SEMANTIC};
use videomap_core::mapmodel::{self, District, Landmark, NodeDetails, TransitionEdge, PALETTE_SIZE};
use videomap_core::media::{MediaTool, RenderReport};
use videomap_core::project::MapProject;
use videomap_core::projection::MapPoint2D;
use videomap_core::routing::{self, CancelToken, CutList, Route};
use videomap_core::{canonical, search, FrameKey, VideoId};

pub use error::{status_of, ApiError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
    pub request_timeout: Duration,
    /// Size of the blocking worker pool.
    pub workers: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            cors_origin: None,
            request_timeout: DEFAULT_TIMEOUT,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

enum Job {
    Running,
    Done(PathBuf, RenderReport),
    Failed(ApiError),
}

pub struct AppState {
    project: MapProject,
    registry: LensRegistry,
    media: Arc<dyn MediaTool>,
    options: ServeOptions,
    pool: Semaphore,
    jobs: Mutex<BTreeMap<u64, Job>>,
    next_job: AtomicU64,
    render_dir: tempfile::TempDir,
}

impl AppState {
    pub fn new(
        project: MapProject,
        registry: LensRegistry,
        media: Arc<dyn MediaTool>,
        options: ServeOptions,
    ) -> std::io::Result<Arc<Self>> {
        Ok(Arc::new(AppState {
            pool: Semaphore::new(options.workers.max(1)),
            project,
            registry,
            media,
            options,
            jobs: Mutex::new(BTreeMap::new()),
            next_job: AtomicU64::new(1),
            render_dir: tempfile::tempdir()?,
        }))
    }

    pub fn project(&self) -> &MapProject {
        &self.project
    }
}

/// Canonical JSON response.
pub(crate) fn json<T: Serialize + ?Sized>(status: StatusCode, value: &T) -> Response {
    match canonical::to_vec(value) {
        Ok(body) => (status, [(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: Serialize + ?Sized>(value: &T) -> ApiResult {
    Ok(json(StatusCode::OK, value))
}

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct Body<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
struct Query<T>(T);

/// Runs engine work on the worker pool under the request timeout. On
/// timeout the token handed to `work` is cancelled.
async fn blocking<T, F>(state: &Arc<AppState>, work: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&AppState, &CancelToken) -> videomap_core::Result<T> + Send + 'static,
{
    let _permit = state.pool.acquire().await.map_err(|e| ApiError::internal(e.to_string()))?;
    let token = CancelToken::new();
    let task = tokio::task::spawn_blocking({
        let state = state.clone();
        let token = token.clone();
        move || work(&state, &token)
    });
    match tokio::time::timeout(state.options.request_timeout, task).await {
        Ok(Ok(result)) => result.map_err(ApiError::from),
        Ok(Err(join)) => Err(ApiError::internal(join.to_string())),
        Err(_) => {
            token.cancel();
            Err(ApiError::timeout())
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.options.cors_origin {
        Some(origin) => match origin.parse::<HeaderValue>() {
            Ok(o) => CorsLayer::new().allow_origin(o),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/api/assets", get(assets))
        .route("/api/map", get(map))
        .route("/api/frame/{video}/{index}", get(frame))
        .route("/api/thumbs/{name}", get(thumb))
        .route("/api/node/{video}/{index}/paths", get(paths))
        .route("/api/route", post(route))
        .route("/api/cutlist", post(cutlist))
        .route("/api/render", post(render))
        .route("/api/render/{id}", get(render_status))
        .route("/api/search", post(search_prompt))
        .route("/api/summary/{video}", get(summary))
        .route("/api/summarize", post(summarize))
        .route("/api/highlight", post(highlight))
        .route("/api/story", post(story))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Serialize)]
struct AssetsResponse<'a> {
    assets: &'a [videomap_core::ingest::VideoAsset],
    lenses: Vec<&'a LensId>,
}

async fn assets(State(state): State<Arc<AppState>>) -> ApiResult {
    let p = &state.project;
    ok(&AssetsResponse {
        assets: &p.catalog.assets,
        lenses: p.lenses.values().map(|d| &d.id).collect(),
    })
}

#[derive(Deserialize)]
struct LensQuery {
    lens: String,
}

#[derive(Serialize)]
struct MapResponse<'a> {
    lens: &'a LensId,
    palette_size: usize,
    points: &'a [MapPoint2D],
    districts: &'a [District],
    landmarks: &'a [Landmark],
}

async fn map(State(state): State<Arc<AppState>>, Query(q): Query<LensQuery>) -> ApiResult {
    let data = state.project.lens(&q.lens)?;
    ok(&MapResponse {
        lens: &data.id,
        palette_size: PALETTE_SIZE,
        points: &data.layout,
        districts: &data.districts,
        landmarks: &data.landmarks,
    })
}

fn jpeg(bytes: Vec<u8>) -> Response {
    (
        [(header::CONTENT_TYPE, "image/jpeg"), (header::CACHE_CONTROL, "max-age=86400")],
        bytes,
    )
        .into_response()
}

async fn frame(State(state): State<Arc<AppState>>, UrlPath((video, index)): UrlPath<(String, u32)>) -> ApiResult {
    let key = FrameKey::new(video, index);
    let record = state.project.catalog.frame(&key)?.clone();
    if !record.thumbnail_ref.is_empty() {
        if let Ok(bytes) = std::fs::read(state.project.root().join(&record.thumbnail_ref)) {
            return Ok(jpeg(bytes));
        }
    }
    let bytes = blocking(&state, move |s, _| {
        let image = s.project.catalog.frame_image(s.media.as_ref(), s.project.root(), &key, Resolution::Native)?;
        let mut buf = Vec::new();
        image::codecs::jpeg::JpegEncoder::new_with_quality(&mut buf, 85)
            .encode_image(&image)
            .map_err(|e| videomap_core::Error::MediaTool(e.to_string()))?;
        Ok(buf)
    })
    .await?;
    Ok(jpeg(bytes))
}

async fn thumb(State(state): State<Arc<AppState>>, UrlPath(name): UrlPath<String>) -> ApiResult {
    let valid = name
        .strip_suffix(".jpg")
        .is_some_and(|h| !h.is_empty() && h.chars().all(|c| c.is_ascii_hexdigit()));
    if !valid {
        return Err(ApiError::not_found(format!("no thumbnail {name}")));
    }
    let path = state.project.root().join(videomap_core::ingest::THUMBS_DIR).join(&name);
    std::fs::read(path)
        .map(jpeg)
        .map_err(|_| ApiError::not_found(format!("no thumbnail {name}")))
}

#[derive(Deserialize)]
struct PathsQuery {
    lens: String,
    k: Option<usize>,
}

#[derive(Serialize)]
struct PathsResponse {
    node: NodeDetails,
    edges: Vec<TransitionEdge>,
}

async fn paths(
    State(state): State<Arc<AppState>>,
    UrlPath((video, index)): UrlPath<(String, u32)>,
    Query(q): Query<PathsQuery>,
) -> ApiResult {
    let key = FrameKey::new(video, index);
    let p = &state.project;
    p.lens(&q.lens)?;
    let node = mapmodel::node_details(p, &key)?;
    let edges = mapmodel::nearest_paths(p, &q.lens, &key, q.k.unwrap_or(p.config.paths_k))?;
    ok(&PathsResponse { node, edges })
}

#[derive(Deserialize)]
struct RouteRequest {
    lens: String,
    video_ids: Vec<VideoId>,
}

async fn route(State(state): State<Arc<AppState>>, Body(req): Body<RouteRequest>) -> ApiResult {
    // Cheap checks up front so oversized requests never reach the pool.
    state.project.lens(&req.lens)?;
    if req.video_ids.len() > routing::MAX_ROUTE_VIDEOS {
        return Err(videomap_core::Error::TooManyVideos(req.video_ids.len()).into());
    }
    let route = blocking(&state, move |s, cancel| {
        routing::plan_route_for(&s.project, &req.lens, &req.video_ids, cancel)
    })
    .await?;
    ok(&route)
}

#[derive(Deserialize)]
struct CutListRequest {
    route: Route,
    min_segment_s: Option<f64>,
}

async fn cutlist(State(state): State<Arc<AppState>>, Body(req): Body<CutListRequest>) -> ApiResult {
    let p = &state.project;
    let min = req.min_segment_s.unwrap_or(p.config.min_segment_s);
    ok(&routing::route_to_cutlist(&req.route, p, min)?)
}

#[derive(Deserialize)]
struct RenderRequest {
    cutlist: CutList,
}

#[derive(Serialize)]
struct JobStatus {
    job_id: u64,
    status: &'static str,
}

fn output_name(id: u64, cutlist: &CutList) -> String {
    let ext = cutlist
        .segments
        .first()
        .and_then(|s| Path::new(&s.source_path).extension())
        .and_then(|e| e.to_str())
        .unwrap_or("mp4");
    format!("render-{id}.{ext}")
}

async fn render(State(state): State<Arc<AppState>>, Body(req): Body<RenderRequest>) -> ApiResult {
    if req.cutlist.segments.is_empty() {
        return Err(videomap_core::Error::EmptyInput.into());
    }
    let id = state.next_job.fetch_add(1, Ordering::Relaxed);
    state.jobs.lock().unwrap().insert(id, Job::Running);
    let out = state.render_dir.path().join(output_name(id, &req.cutlist));
    let cutlist = req.cutlist.resolved_against(state.project.root());
    let worker = state.clone();
    tokio::spawn(async move {
        let result = match worker.pool.acquire().await {
            Ok(_permit) => {
                let media = worker.media.clone();
                let target = out.clone();
                tokio::task::spawn_blocking(move || media.render(&cutlist, &target))
                    .await
                    .unwrap_or_else(|e| Err(videomap_core::Error::MediaTool(e.to_string())))
            }
            Err(e) => Err(videomap_core::Error::MediaTool(e.to_string())),
        };
        let job = match result {
            Ok(report) => Job::Done(out, report),
            Err(e) => Job::Failed(e.into()),
        };
        worker.jobs.lock().unwrap().insert(id, job);
    });
    Ok(json(
        StatusCode::ACCEPTED,
        &JobStatus {
            job_id: id,
            status: "running",
        },
    ))
}

/// 202 with a status body while running; the rendered file once done.
async fn render_status(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<u64>) -> ApiResult {
    let done = match state.jobs.lock().unwrap().get(&id) {
        None => return Err(ApiError::new(StatusCode::NOT_FOUND, "JobNotFound", format!("no render job {id}"))),
        Some(Job::Failed(e)) => return Err(e.clone()),
        Some(Job::Running) => None,
        Some(Job::Done(path, report)) => Some((path.clone(), *report)),
    };
    let Some((path, report)) = done else {
        return Ok(json(
            StatusCode::ACCEPTED,
            &JobStatus {
                job_id: id,
                status: "running",
            },
        ));
    };
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let kind = match path.extension().and_then(|e| e.to_str()) {
        Some("mp4") => "video/mp4",
        _ => "application/octet-stream",
    };
    Ok((
        [
            (header::CONTENT_TYPE, kind.to_owned()),
            (
                header::HeaderName::from_static("x-render-duration"),
                format!("{}", report.duration_s),
            ),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Deserialize)]
struct SearchRequest {
    lens: String,
    prompt: String,
    k: Option<usize>,
}

async fn search_prompt(State(state): State<Arc<AppState>>, Body(req): Body<SearchRequest>) -> ApiResult {
    let result = blocking(&state, move |s, _| {
        let k = req.k.unwrap_or(s.project.config.search_k);
        search::prompt_search(&s.project, &s.registry, &req.lens, &req.prompt, k)
    })
    .await?;
    ok(&result)
}

#[derive(Deserialize)]
struct SummaryQuery {
    lens: Option<String>,
    seed: Option<u64>,
}

fn districts_for(s: &AppState, video: &VideoId, lens: Option<&str>, seed: Option<u64>) -> videomap_core::Result<SemanticDistrictSet> {
    let p = &s.project;
    extensions::semantic_districts(p, lens.unwrap_or(SEMANTIC), video, seed.unwrap_or(p.config.kmeans_seed))
}

async fn summary(
    State(state): State<Arc<AppState>>,
    UrlPath(video): UrlPath<String>,
    Query(q): Query<SummaryQuery>,
) -> ApiResult {
    let set = blocking(&state, move |s, _| districts_for(s, &VideoId::from(video), q.lens.as_deref(), q.seed)).await?;
    ok(&set)
}

#[derive(Deserialize)]
struct SummarizeRequest {
    video_id: VideoId,
    landmark_order: Vec<usize>,
    lens: Option<String>,
    seed: Option<u64>,
}

async fn summarize(State(state): State<Arc<AppState>>, Body(req): Body<SummarizeRequest>) -> ApiResult {
    let cl = blocking(&state, move |s, _| {
        let set = districts_for(s, &req.video_id, req.lens.as_deref(), req.seed)?;
        extensions::summarize(&s.project, &set, &req.landmark_order)
    })
    .await?;
    ok(&cl)
}

async fn highlight(State(state): State<Arc<AppState>>, mut form: Multipart) -> ApiResult {
    let mut photo = None;
    let mut lens = SEMANTIC.to_owned();
    while let Some(field) = form.next_field().await? {
        match field.name() {
            Some("photo") => photo = Some(field.bytes().await?),
            Some("lens") => lens = field.text().await?,
            _ => {}
        }
    }
    let photo = photo.ok_or_else(|| ApiError::bad_request("multipart field `photo` is required"))?;
    let result = blocking(&state, move |s, _| {
        let image = image::load_from_memory(&photo)
            .map_err(|e| videomap_core::Error::UndecodableImage(e.to_string()))?
            .to_rgb8();
        extensions::find_highlight(&s.project, &s.registry, &lens, &image)
    })
    .await?;
    ok(&result)
}

#[derive(Deserialize)]
struct StoryRequest {
    lens: String,
    sentences: Vec<String>,
}

async fn story(State(state): State<Arc<AppState>>, Body(req): Body<StoryRequest>) -> ApiResult {
    let edit = blocking(&state, move |s, _| {
        extensions::story_edit(&s.project, &s.registry, &req.lens, &req.sentences)
    })
    .await?;
    ok(&edit)
}
