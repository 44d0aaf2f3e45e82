use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

use kinesphere::resolver::CommandLine;
use kinesphere::{CommandQuery, EclError};

use crate::catalog::{catalog, Catalog};
use crate::session::{spawn_ticker, HistoryEntry, Loaded, ServiceConfig, Session, StateMessage};
use crate::WIRE_VERSION;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown platform `{0}`")]
    UnknownPlatform(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("platform `{0}` is loaded twice")]
    DuplicatePlatform(String),
    #[error("databank does not fit platform `{platform}`: {error}")]
    StoreMismatch { platform: String, error: EclError },
}

impl ServiceError {
    fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownPlatform(_) => "UnknownPlatform",
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::DuplicatePlatform(_) => "DuplicatePlatform",
            ServiceError::StoreMismatch { .. } => "StoreMismatch",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::UnknownPlatform(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({"v": WIRE_VERSION, "error": {"kind": self.kind(), "message": self.to_string()}});
        (status, Json(body)).into_response()
    }
}

struct Inner {
    platforms: BTreeMap<String, Arc<Loaded>>,
    catalog: Catalog,
    sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
    config: ServiceConfig,
}

/// Loaded platforms and live sessions. Cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Checks every databank against its platform.
    pub fn new(loaded: Vec<Loaded>, config: ServiceConfig) -> Result<Self, ServiceError> {
        let mut platforms = BTreeMap::new();
        for l in loaded {
            let name = l.platform.name.clone();
            l.store
                .check_against(&l.platform)
                .map_err(|error| ServiceError::StoreMismatch {
                    platform: name.clone(),
                    error,
                })?;
            if platforms.insert(name.clone(), Arc::new(l)).is_some() {
                return Err(ServiceError::DuplicatePlatform(name));
            }
        }
        let catalog = catalog(platforms.values().map(|l| (&l.platform, &l.store)));
        Ok(Self(Arc::new(Inner {
            platforms,
            catalog,
            sessions: RwLock::new(HashMap::new()),
            config,
        })))
    }

    pub fn catalog(&self) -> &Catalog {
        &self.0.catalog
    }

    /// Starts a session and its ticker. Needs a tokio runtime.
    pub fn create_session(&self, platform: &str) -> Result<Arc<Session>, ServiceError> {
        let loaded = self
            .0
            .platforms
            .get(platform)
            .ok_or_else(|| ServiceError::UnknownPlatform(platform.into()))?;
        let session = Session::new(loaded.clone(), self.0.config);
        spawn_ticker(&session);
        self.0
            .sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session.id, session.clone());
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ServiceError> {
        Uuid::parse_str(id)
            .ok()
            .and_then(|u| self.0.sessions.read().unwrap_or_else(|e| e.into_inner()).get(&u).cloned())
            .ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    /// Ends a session; its ticker and streams stop with it.
    pub fn remove_session(&self, id: &str) -> Result<(), ServiceError> {
        let session = self.session(id)?;
        self.0
            .sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .remove(&session.id);
        Ok(())
    }
}

#[derive(Deserialize)]
struct CreateBody {
    platform: String,
}

#[derive(Serialize)]
struct Created {
    v: u32,
    session: Uuid,
    platform: String,
    state: Arc<StateMessage>,
}

#[derive(Serialize)]
struct SessionInfo {
    v: u32,
    session: Uuid,
    platform: String,
    history: Vec<HistoryEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CommandBody {
    Text { text: String },
    Query { command: CommandQuery },
}

#[derive(Serialize)]
struct Cancelled {
    v: u32,
    dropped: usize,
    state: Arc<StateMessage>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/platforms", get(platforms))
        .route("/sessions", post(create))
        .route("/sessions/:id", get(info).delete(remove))
        .route("/sessions/:id/commands", post(command))
        .route("/sessions/:id/cancel", post(cancel))
        .route("/sessions/:id/state", get(current))
        .route("/sessions/:id/stream", get(stream))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn platforms(State(app): State<AppState>) -> Json<Catalog> {
    Json(app.catalog().clone())
}

async fn create(State(app): State<AppState>, Json(body): Json<CreateBody>) -> Result<Response, ServiceError> {
    let s = app.create_session(&body.platform)?;
    let created = Created {
        v: WIRE_VERSION,
        session: s.id,
        platform: body.platform,
        state: s.latest(),
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn info(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionInfo>, ServiceError> {
    let s = app.session(&id)?;
    Ok(Json(SessionInfo {
        v: WIRE_VERSION,
        session: s.id,
        platform: s.loaded.platform.name.clone(),
        history: s.history(),
    }))
}

async fn remove(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ServiceError> {
    app.remove_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn command(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<CommandBody>,
) -> Result<Response, ServiceError> {
    let s = app.session(&id)?;
    let response = match body {
        CommandBody::Text { text } => s.submit_text(&text),
        CommandBody::Query { command } => s.submit(&[CommandLine {
            line: 1,
            commands: vec![command],
        }]),
    };
    let status = if response.accepted {
        StatusCode::OK
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    Ok((status, Json(response)).into_response())
}

async fn cancel(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Cancelled>, ServiceError> {
    let s = app.session(&id)?;
    let dropped = s.cancel();
    Ok(Json(Cancelled {
        v: WIRE_VERSION,
        dropped,
        state: s.latest(),
    }))
}

async fn current(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Arc<StateMessage>>, ServiceError> {
    Ok(Json(app.session(&id)?.latest()))
}

async fn stream(
    State(app): State<AppState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    let rx = app.session(&id)?.subscribe();
    Ok(ws.on_upgrade(move |socket| forward(socket, rx)))
}

/// Sends the latest state at once, then every new one, until either side goes away.
async fn forward(mut socket: WebSocket, mut rx: tokio::sync::watch::Receiver<Arc<StateMessage>>) {
    let mut next = Some(rx.borrow_and_update().clone());
    loop {
        if let Some(msg) = next.take() {
            let text = serde_json::to_string(&*msg).expect("state serializes");
            if socket.send(Message::Text(text)).await.is_err() {
                return;
            }
        }
        tokio::select! {
            changed = rx.changed() => {
                if changed.is_err() {
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
                next = Some(rx.borrow_and_update().clone());
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
