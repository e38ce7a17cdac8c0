//! The HTTP service.
//!
//! All writes go through one [`Hub`] behind a mutex, which makes it the
//! single sequencer of the journal. Reads take the current immutable state
//! snapshot and release the lock before doing any work.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, MatchedPath, Path, Query, Request, State};
use axum::middleware::{self, Next};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;
use tokio::sync::{oneshot, watch};

use paperstack::flow::ProjectPlan;
use paperstack::hub::{Clock, Command, ErrorKind, Hub, HubError, ProjectState, Reply};
use paperstack::ids::{DesignId, DraftId, OrgId, PlanId, ShipId, ThreadId};
use paperstack::parts::parts_list_csv;
use paperstack::sfi::{PartIdentity, SfiPath};
use paperstack::store::{ContentHash, DocumentId};
use paperstack::sync::ReplicaSummary;

use crate::api::*;

/// Longest a client may hold an `/events` long-poll open.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot open the hub: {0}")]
    Hub(#[from] HubError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("runtime: {0}")]
    Runtime(std::io::Error),
}

/// Error response: a status and a JSON [`ErrorBody`].
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn invalid(message: impl Into<String>, path: Option<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: ErrorDetail {
                    kind: ErrorKind::Invalid,
                    message: message.into(),
                    path,
                },
            },
        }
    }
}

pub fn status_of(kind: ErrorKind) -> StatusCode {
    match kind {
        ErrorKind::Forbidden => StatusCode::FORBIDDEN,
        ErrorKind::NotFound => StatusCode::NOT_FOUND,
        ErrorKind::Conflict => StatusCode::CONFLICT,
        ErrorKind::Invalid => StatusCode::BAD_REQUEST,
        ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        Self {
            status: status_of(e.kind()),
            body: ErrorBody {
                error: ErrorDetail {
                    kind: e.kind(),
                    message: e.to_string(),
                    path: None,
                },
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// JSON body with field-path validation errors.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::invalid(e.body_text(), None))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map(Body).map_err(|e| {
            let path = e.path().to_string();
            ApiError::invalid(e.into_inner().to_string(), Some(path))
        })
    }
}

/// Query string parameters, rejected in the same error format.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        Query::<T>::try_from_uri(&parts.uri)
            .map(|Query(t)| Params(t))
            .map_err(|e| ApiError::invalid(e.body_text(), None))
    }
}

#[derive(Deserialize)]
struct ActorQuery {
    actor: OrgId,
}

#[derive(Deserialize)]
struct FormatQuery {
    actor: OrgId,
    #[serde(default)]
    format: Option<String>,
}

#[derive(Deserialize)]
struct DocQuery {
    actor: OrgId,
    sfi: String,
    name: String,
    supplier: String,
    doc_name: String,
}

#[derive(Deserialize)]
struct CheckQuery {
    actor: OrgId,
    org: OrgId,
    loc: String,
    level: String,
}

#[derive(Deserialize)]
struct EventsQuery {
    actor: OrgId,
    #[serde(default)]
    since: u64,
    #[serde(default)]
    wait_ms: u64,
}

#[derive(Deserialize)]
struct SummaryRequest {
    actor: OrgId,
    summary: ReplicaSummary,
}

struct Shared {
    hub: Mutex<Hub>,
    /// Id of the newest event, for waking long-polls.
    latest: watch::Sender<u64>,
    /// Requests answered per (method, route).
    served: Mutex<BTreeMap<(String, String), u64>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(hub: Hub) -> Self {
        let (latest, _) = watch::channel(hub.state().events.last_id());
        Self(Arc::new(Shared {
            hub: Mutex::new(hub),
            latest,
            served: Mutex::default(),
        }))
    }

    pub fn digest(&self) -> String {
        self.lock().digest()
    }

    pub fn journal_len(&self) -> u64 {
        self.lock().journal_len()
    }

    pub fn state(&self) -> Arc<ProjectState> {
        self.snapshot()
    }

    /// Requests answered so far per `(METHOD, route)`.
    pub fn served(&self) -> BTreeMap<(String, String), u64> {
        self.0.served.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    fn lock(&self) -> MutexGuard<'_, Hub> {
        self.0.hub.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn snapshot(&self) -> Arc<ProjectState> {
        self.lock().state()
    }

    fn submit(&self, actor: &OrgId, key: &str, command: Command) -> ApiResult<Json<Reply>> {
        let mut hub = self.lock();
        let reply = hub.submit(actor, Some(key), command)?;
        self.0.latest.send_replace(hub.state().events.last_id());
        Ok(Json(reply))
    }

    /// Runs the scheduler once per real day. Simulated hubs tick on
    /// `advance_clock` instead.
    pub fn tick_if_due(&self) -> Result<(), HubError> {
        let mut hub = self.lock();
        let state = hub.state();
        if state.clock != Clock::Real || state.last_tick == Some(state.today(hub.now())) {
            return Ok(());
        }
        hub.submit(&state.owner, None, Command::Tick)?;
        self.0.latest.send_replace(hub.state().events.last_id());
        Ok(())
    }
}

fn csv_response(text: String) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], text).into_response()
}

fn parse<T: std::str::FromStr>(what: &str, text: &str) -> ApiResult<T>
where
    T::Err: std::fmt::Display,
{
    text.parse()
        .map_err(|e| ApiError::invalid(format!("{e}"), Some(what.to_owned())))
}

async fn health(State(app): State<AppState>) -> Json<Health> {
    let state = app.snapshot();
    Json(Health {
        status: "ok".into(),
        project: state.project.clone(),
        journal_len: state.seq,
    })
}

async fn list_ship_types(
    State(app): State<AppState>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.snapshot().ship_types_for(&q.actor)?))
}

async fn register_ship_type(
    State(app): State<AppState>,
    Body(env): Body<Envelope<NewShipType>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::RegisterShipType {
            id: r.id,
            name: r.name,
            parts: r.parts,
        },
    )
}

async fn list_ships(
    State(app): State<AppState>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.snapshot().ships_for(&q.actor)?))
}

async fn create_ship(
    State(app): State<AppState>,
    Body(env): Body<Envelope<NewShip>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::CreateShip {
            id: r.id,
            name: r.name,
            ship_type: r.ship_type,
        },
    )
}

async fn show_ship(
    State(app): State<AppState>,
    Path(id): Path<ShipId>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.snapshot().ship_summary_for(&q.actor, &id)?))
}

async fn parts_list(
    State(app): State<AppState>,
    Path(id): Path<ShipId>,
    Params(q): Params<FormatQuery>,
) -> ApiResult<Response> {
    let entries = app.snapshot().parts_list_for(&q.actor, &id)?;
    Ok(match q.format.as_deref() {
        Some("csv") => csv_response(parts_list_csv(&entries)),
        _ => Json(entries).into_response(),
    })
}

async fn create_design(
    State(app): State<AppState>,
    Body(env): Body<Envelope<NewDesign>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::CreateDesign {
            id: r.id,
            ship: r.ship,
            title: r.title,
        },
    )
}

async fn attach_draft(
    State(app): State<AppState>,
    Path(design): Path<DesignId>,
    Body(env): Body<Envelope<AttachDraft>>,
) -> ApiResult<Json<Reply>> {
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::Attach {
            design,
            draft: env.request.draft,
        },
    )
}

async fn create_draft(
    State(app): State<AppState>,
    Body(env): Body<Envelope<NewDraft>>,
) -> ApiResult<Json<Reply>> {
    let spec = env.request.spec();
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::CreateDraft {
            id: r.id,
            ship: r.ship,
            spec,
            design: r.design,
        },
    )
}

async fn concretize(
    State(app): State<AppState>,
    Path(draft): Path<DraftId>,
    Body(env): Body<Envelope<ConcretizeDraft>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::Concretize {
            draft,
            attribute: r.attribute,
            value: r.value,
        },
    )
}

async fn supersede(
    State(app): State<AppState>,
    Path(draft): Path<DraftId>,
    Body(env): Body<Envelope<SupersedeDraft>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::Supersede {
            draft,
            new_id: r.new_id,
            corrections: r.corrections,
        },
    )
}

async fn sync_diff(
    State(app): State<AppState>,
    Body(req): Body<SummaryRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.snapshot().diff_for(&req.actor, &req.summary)))
}

async fn blob(
    State(app): State<AppState>,
    Path(hash): Path<String>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<Response> {
    let hash: ContentHash = parse("hash", &hash)?;
    let bytes = app.lock().blob(&q.actor, &hash)?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

async fn sync_push(
    State(app): State<AppState>,
    Body(env): Body<Envelope<PushDocument>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(r.content.as_bytes())
        .map_err(|e| ApiError::invalid(e.to_string(), Some("request.content".into())))?;
    let mut hub = app.lock();
    let reply = hub.push(&env.actor, Some(&env.idempotency_key), &r.doc, &bytes, &r.format_tag)?;
    app.0.latest.send_replace(hub.state().events.last_id());
    Ok(Json(reply))
}

async fn versions(
    State(app): State<AppState>,
    Params(q): Params<DocQuery>,
) -> ApiResult<impl IntoResponse> {
    let part = PartIdentity::parse(&q.sfi, &q.name, &q.supplier).map_err(HubError::from)?;
    let doc = DocumentId::new(part, q.doc_name);
    Ok(Json(app.snapshot().versions_for(&q.actor, &doc)?))
}

async fn deprecate(
    State(app): State<AppState>,
    Body(env): Body<Envelope<DeprecateVersion>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::Deprecate {
            doc: r.doc,
            version: r.version,
        },
    )
}

async fn grant_add(
    State(app): State<AppState>,
    Body(env): Body<Envelope<GrantChange>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::Grant {
            principal: r.principal,
            scope: r.scope,
            level: r.level,
        },
    )
}

async fn grant_revoke(
    State(app): State<AppState>,
    Body(env): Body<Envelope<GrantChange>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::Revoke {
            principal: r.principal,
            scope: r.scope,
            level: r.level,
        },
    )
}

async fn grant_check(
    State(app): State<AppState>,
    Params(q): Params<CheckQuery>,
) -> ApiResult<Json<GrantCheck>> {
    let location: SfiPath = parse("loc", &q.loc)?;
    let level = parse("level", &q.level)?;
    let allowed = app.snapshot().check_for(&q.actor, &q.org, &location, level)?;
    Ok(Json(GrantCheck {
        org: q.org,
        location,
        level,
        allowed,
    }))
}

async fn import_plan(
    State(app): State<AppState>,
    Body(env): Body<Envelope<PlanImport>>,
) -> ApiResult<Json<Reply>> {
    let plan = match env.request {
        PlanImport::Plan { plan } => plan,
        PlanImport::Records { records } => {
            ProjectPlan::from_records(&records).map_err(HubError::from)?
        }
    };
    app.submit(&env.actor, &env.idempotency_key, Command::ImportPlan { plan })
}

async fn export_plan(
    State(app): State<AppState>,
    Path(id): Path<PlanId>,
    Params(q): Params<FormatQuery>,
) -> ApiResult<Response> {
    let state = app.snapshot();
    let plan = state.project_plan_for(&q.actor, &id)?;
    Ok(match q.format.as_deref() {
        Some("records") => csv_response(plan.to_records()),
        _ => Json(plan).into_response(),
    })
}

async fn generate_plan(
    State(app): State<AppState>,
    Path(plan): Path<PlanId>,
    Body(env): Body<Envelope<GeneratePlan>>,
) -> ApiResult<Json<Reply>> {
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::GeneratePlan {
            plan,
            lead_time_days: env.request.lead_time_days,
        },
    )
}

async fn requesting_plan(
    State(app): State<AppState>,
    Path(id): Path<PlanId>,
    Params(q): Params<FormatQuery>,
) -> ApiResult<Response> {
    let state = app.snapshot();
    let plan = state.requesting_plan_for(&q.actor, &id)?;
    Ok(match q.format.as_deref() {
        Some("csv") => csv_response(plan.to_csv()),
        _ => Json(plan).into_response(),
    })
}

async fn alerts(
    State(app): State<AppState>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.snapshot().alerts_for(&q.actor)?))
}

async fn polls(
    State(app): State<AppState>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.snapshot().polls_for(&q.actor)?))
}

async fn send_request(
    State(app): State<AppState>,
    Body(env): Body<Envelope<SendRequest>>,
) -> ApiResult<Json<Reply>> {
    let r = env.request;
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::ManualRequest {
            subject: r.subject,
            body: r.body,
        },
    )
}

async fn show_thread(
    State(app): State<AppState>,
    Path(id): Path<ThreadId>,
    Params(q): Params<ActorQuery>,
) -> ApiResult<impl IntoResponse> {
    let state = app.snapshot();
    Ok(Json(state.thread_for(&q.actor, &id)?.clone()))
}

async fn post_message(
    State(app): State<AppState>,
    Path(thread): Path<ThreadId>,
    Body(env): Body<Envelope<PostMessage>>,
) -> ApiResult<Json<Reply>> {
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::PostMessage {
            thread,
            body: env.request.body,
        },
    )
}

/// Long-poll: answers at once if the actor has events after `since`,
/// otherwise waits up to `wait_ms` for one.
async fn events(
    State(app): State<AppState>,
    Params(q): Params<EventsQuery>,
) -> ApiResult<Json<EventPage>> {
    let deadline = tokio::time::Instant::now() + Duration::from_millis(q.wait_ms).min(MAX_WAIT);
    let mut latest = app.0.latest.subscribe();
    loop {
        let events = app.snapshot().events_for(&q.actor, q.since);
        if !events.is_empty() || tokio::time::Instant::now() >= deadline {
            let last_id = events.last().map_or(q.since, |e| e.id);
            return Ok(Json(EventPage { events, last_id }));
        }
        match tokio::time::timeout_at(deadline, latest.changed()).await {
            Ok(Ok(())) => continue,
            _ => {
                return Ok(Json(EventPage {
                    events: Vec::new(),
                    last_id: q.since,
                }))
            }
        }
    }
}

async fn clock(State(app): State<AppState>) -> Json<ClockInfo> {
    let hub = app.lock();
    let state = hub.state();
    Json(ClockInfo {
        clock: state.clock,
        today: state.today(hub.now()),
    })
}

async fn advance_clock(
    State(app): State<AppState>,
    Body(env): Body<Envelope<AdvanceClock>>,
) -> ApiResult<Json<Reply>> {
    app.submit(
        &env.actor,
        &env.idempotency_key,
        Command::AdvanceClock { to: env.request.to },
    )
}

async fn fallback() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        body: ErrorBody {
            error: ErrorDetail {
                kind: ErrorKind::NotFound,
                message: "no such endpoint".into(),
                path: None,
            },
        },
    }
}

async fn record_route(
    State(app): State<AppState>,
    matched: MatchedPath,
    req: Request,
    next: Next,
) -> Response {
    let key = (req.method().to_string(), matched.as_str().to_owned());
    app.0
        .served
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .entry(key)
        .and_modify(|n| *n += 1)
        .or_insert(1);
    next.run(req).await
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/ship-types", get(list_ship_types).post(register_ship_type))
        .route("/ships", get(list_ships).post(create_ship))
        .route("/ships/{id}", get(show_ship))
        .route("/ships/{id}/parts-list", get(parts_list))
        .route("/designs", post(create_design))
        .route("/designs/{id}/drafts", post(attach_draft))
        .route("/drafts", post(create_draft))
        .route("/drafts/{id}/concretize", post(concretize))
        .route("/drafts/{id}/supersede", post(supersede))
        .route("/sync/diff", post(sync_diff))
        .route("/blobs/{hash}", get(blob))
        .route("/sync/push", post(sync_push))
        .route("/documents/versions", get(versions))
        .route("/documents/deprecate", post(deprecate))
        .route("/grants", post(grant_add))
        .route("/grants/revoke", post(grant_revoke))
        .route("/grants/check", get(grant_check))
        .route("/plans", post(import_plan))
        .route("/plans/{id}", get(export_plan))
        .route("/plans/{id}/generate", post(generate_plan))
        .route("/plans/{id}/requesting", get(requesting_plan))
        .route("/alerts", get(alerts))
        .route("/polls", get(polls))
        .route("/requests", post(send_request))
        .route("/threads/{id}", get(show_thread))
        .route("/threads/{id}/messages", post(post_message))
        .route("/events", get(events))
        .route("/clock", get(clock))
        .route("/clock/advance", post(advance_clock))
        .route_layer(middleware::from_fn_with_state(app.clone(), record_route))
        .fallback(fallback)
        .with_state(app)
}

/// Serves until `shutdown` resolves. In real-clock mode the scheduler runs
/// every `poll_interval`.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: AppState,
    poll_interval: Duration,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let ticker = app.clone();
    let ticks = tokio::spawn(async move {
        let mut interval = tokio::time::interval(poll_interval);
        loop {
            interval.tick().await;
            if let Err(e) = ticker.tick_if_due() {
                tracing::warn!("scheduler tick failed: {e}");
            }
        }
    });
    let result = axum::serve(listener, router(app))
        .with_graceful_shutdown(shutdown)
        .await;
    ticks.abort();
    result
}

/// A service running on its own thread, stopped on drop.
pub struct Running {
    pub addr: SocketAddr,
    pub app: AppState,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl Running {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> std::io::Result<()> {
        self.halt()
    }

    fn halt(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or(Ok(())),
            None => Ok(()),
        }
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.halt();
    }
}

/// Binds `addr` (fails fast if taken) and serves `hub` on a background thread.
pub fn spawn(hub: Hub, addr: &str, poll_interval: Duration) -> Result<Running, ServiceError> {
    let bind_err = |source| ServiceError::Bind {
        addr: addr.to_owned(),
        source,
    };
    let std_listener = std::net::TcpListener::bind(addr).map_err(bind_err)?;
    std_listener.set_nonblocking(true).map_err(bind_err)?;
    let local = std_listener.local_addr().map_err(bind_err)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(ServiceError::Runtime)?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = AppState::new(hub);
    let served = app.clone();
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener)?;
            serve(listener, app, poll_interval, async {
                let _ = rx.await;
            })
            .await
        })
    });
    Ok(Running {
        addr: local,
        app: served,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
