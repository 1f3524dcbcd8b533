//! HTTP/WebSocket bridge to a running simulator, for browser consoles.
//!
//! | route            | method | body                                   |
//! |------------------|--------|----------------------------------------|
//! | `/stream`        | GET    | multipart PGM frames                   |
//! | `/api/config`    | GET    | pipeline config JSON                   |
//! | `/api/config`    | PUT    | pipeline config JSON, 400 on bad field |
//! | `/api/metrics`   | GET    | tracking metrics JSON                  |
//! | `/api/mode`      | GET    | `{"mode": ...}`                        |
//! | `/api/mode`      | POST   | `{"mode": "idle"\|"teleop"\|"track"}`  |
//! | `/api/status`    | GET    | mode, pose, clock, tracker error       |
//! | `/api/uart`      | POST   | one command line; 409 unless teleop    |
//! | `/uart`          | WS     | text command in, device response out   |
//!
//! Commands from the console and from the tracking loop never interleave:
//! the mode lock is held for the whole of a teleop transaction, and the
//! tracker is joined before the mode changes.

use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::client::{
    track_with, ClientConnection, DeviceLink, PipelineConfig, QueueLink, SlotCamera, TrackHooks,
    TrackingMetrics, ACK_TIMEOUT,
};
use crate::sim::{Pose, SimHandle};
use crate::transport::multipart::{encode_part, stream_content_type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Idle,
    Teleop,
    Track,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRequest {
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeStatus {
    pub mode: Mode,
    pub clock: f64,
    pub pose: Pose,
    pub last_response: String,
    pub tracker_error: Option<String>,
}

/// Device response sent back when a command arrives outside teleop mode.
pub const CONFLICT_RESPONSE: &str = "err Conflict";

struct Tracker {
    cancel: Arc<AtomicBool>,
    thread: JoinHandle<()>,
}

#[derive(Default)]
struct Session {
    mode: Mode,
    tracker: Option<Tracker>,
}

struct Shared {
    sim: SimHandle,
    config: RwLock<PipelineConfig>,
    metrics: Mutex<TrackingMetrics>,
    tracker_error: Mutex<Option<String>>,
    session: Mutex<Session>,
    closing: AtomicBool,
}

type AppState = Arc<Shared>;

impl Shared {
    fn set_mode(self: &Arc<Self>, mode: Mode) {
        let mut session = self.session.lock().unwrap();
        if session.mode == mode {
            return;
        }
        if let Some(t) = session.tracker.take() {
            t.cancel.store(true, Ordering::Relaxed);
            let _ = t.thread.join();
        }
        match mode {
            Mode::Track => session.tracker = Some(self.spawn_tracker()),
            Mode::Idle => {
                let _ = QueueLink::new(self.sim.requests.clone()).transact("stop()", ACK_TIMEOUT);
            }
            Mode::Teleop => {}
        }
        session.mode = mode;
    }

    fn spawn_tracker(self: &Arc<Self>) -> Tracker {
        *self.metrics.lock().unwrap() = TrackingMetrics::default();
        *self.tracker_error.lock().unwrap() = None;
        let cancel = Arc::new(AtomicBool::new(false));
        let shared = self.clone();
        let flag = cancel.clone();
        let thread = thread::spawn(move || {
            let outcome = ClientConnection::handshake(QueueLink::new(shared.sim.requests.clone()))
                .map_err(|e| e.to_string())
                .and_then(|mut conn| {
                    let mut cam = SlotCamera::new(shared.sim.frames.clone());
                    let mut hooks = LiveHooks {
                        shared: &shared,
                        cancel: &flag,
                    };
                    let r = track_with(&mut conn, &mut cam, &mut hooks, f64::INFINITY, |_| {});
                    let _ = conn.stop();
                    r.map(|_| ()).map_err(|e| e.to_string())
                });
            if let Err(e) = outcome {
                *shared.tracker_error.lock().unwrap() = Some(e);
            }
        });
        Tracker { cancel, thread }
    }

    /// Sends one teleop line, holding the mode lock so the tracker cannot
    /// start mid-transaction.
    fn teleop(&self, line: &str) -> Result<String, String> {
        let session = self.session.lock().unwrap();
        if session.mode != Mode::Teleop {
            return Err(CONFLICT_RESPONSE.to_string());
        }
        let line = line.trim_end_matches(['\r', '\n']);
        Ok(QueueLink::new(self.sim.requests.clone())
            .transact(line, ACK_TIMEOUT)
            .unwrap_or_else(|e| format!("err {e}")))
    }
}

struct LiveHooks<'a> {
    shared: &'a Shared,
    cancel: &'a AtomicBool,
}

impl TrackHooks for LiveHooks<'_> {
    fn config(&mut self) -> PipelineConfig {
        *self.shared.config.read().unwrap()
    }

    fn publish(&mut self, metrics: &TrackingMetrics) {
        self.shared.metrics.lock().unwrap().clone_from(metrics);
    }

    fn cancelled(&mut self) -> bool {
        self.cancel.load(Ordering::Relaxed) || self.shared.closing.load(Ordering::Relaxed)
    }
}

fn error_body(status: StatusCode, field: Option<&str>, message: String) -> Response {
    (status, Json(json!({ "error": message, "field": field }))).into_response()
}

async fn get_config(State(s): State<AppState>) -> Json<PipelineConfig> {
    Json(*s.config.read().unwrap())
}

async fn put_config(State(s): State<AppState>, body: String) -> Response {
    match PipelineConfig::from_json(&body) {
        Ok(config) => {
            *s.config.write().unwrap() = config;
            Json(config).into_response()
        }
        Err(e) => error_body(StatusCode::BAD_REQUEST, Some(&e.field), e.to_string()),
    }
}

async fn get_metrics(State(s): State<AppState>) -> Json<TrackingMetrics> {
    Json(s.metrics.lock().unwrap().clone())
}

async fn get_mode(State(s): State<AppState>) -> Json<ModeRequest> {
    Json(ModeRequest {
        mode: s.session.lock().unwrap().mode,
    })
}

async fn post_mode(State(s): State<AppState>, body: String) -> Response {
    let req: ModeRequest = match crate::input::from_json(&body) {
        Ok(r) => r,
        Err(e) => return error_body(StatusCode::BAD_REQUEST, Some(&e.field), e.to_string()),
    };
    let shared = s.clone();
    match tokio::task::spawn_blocking(move || shared.set_mode(req.mode)).await {
        Ok(()) => Json(req).into_response(),
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, None, e.to_string()),
    }
}

async fn get_status(State(s): State<AppState>) -> Json<BridgeStatus> {
    let st = s.sim.status();
    Json(BridgeStatus {
        mode: s.session.lock().unwrap().mode,
        clock: st.clock,
        pose: st.pose,
        last_response: st.last_response.trim_end().to_string(),
        tracker_error: s.tracker_error.lock().unwrap().clone(),
    })
}

async fn post_uart(State(s): State<AppState>, body: String) -> Response {
    match tokio::task::spawn_blocking(move || s.teleop(&body)).await {
        Ok(Ok(reply)) => reply.into_response(),
        Ok(Err(conflict)) => (StatusCode::CONFLICT, conflict).into_response(),
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, None, e.to_string()),
    }
}

async fn uart_ws(State(s): State<AppState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| uart_session(s, socket))
}

async fn uart_session(s: AppState, mut socket: WebSocket) {
    while let Some(Ok(msg)) = socket.recv().await {
        let line = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let shared = s.clone();
        let reply = match tokio::task::spawn_blocking(move || shared.teleop(&line)).await {
            Ok(Ok(r) | Err(r)) => r,
            Err(_) => break,
        };
        if socket.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}

async fn stream(State(s): State<AppState>) -> Response {
    let parts = futures::stream::unfold((s, 0u64), |(s, mut seen)| async move {
        loop {
            if s.closing.load(Ordering::Relaxed) {
                return None;
            }
            match s.sim.frames.latest() {
                Some((seq, frame)) if seq > seen => {
                    seen = seq;
                    if let Some(part) = encode_part(&frame) {
                        return Some((Ok::<_, io::Error>(Bytes::from(part)), (s, seen)));
                    }
                }
                _ if s.sim.frames.is_closed() => return None,
                _ => tokio::time::sleep(Duration::from_millis(5)).await,
            }
        }
    });
    (
        [
            (header::CONTENT_TYPE, stream_content_type()),
            (header::CACHE_CONTROL, "no-cache".to_string()),
        ],
        Body::from_stream(parts),
    )
        .into_response()
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/stream", get(stream))
        .route("/api/config", get(get_config).put(put_config))
        .route("/api/metrics", get(get_metrics))
        .route("/api/mode", get(get_mode).post(post_mode))
        .route("/api/status", get(get_status))
        .route("/api/uart", post(post_uart))
        .route("/uart", get(uart_ws))
        .with_state(state)
}

/// A bridge running on its own thread and runtime.
pub struct BridgeServer {
    addr: SocketAddr,
    shared: AppState,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl BridgeServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn mode(&self) -> Mode {
        self.shared.session.lock().unwrap().mode
    }

    /// Blocks until the server stops (it only stops when shut down).
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.shared.closing.store(true, Ordering::Relaxed);
        self.shared.set_mode(Mode::Idle);
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for BridgeServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves the bridge for `sim`.
pub fn serve_bridge(sim: SimHandle, addr: SocketAddr, config: PipelineConfig) -> io::Result<BridgeServer> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        sim,
        config: RwLock::new(config),
        metrics: Mutex::new(TrackingMetrics::default()),
        tracker_error: Mutex::new(None),
        session: Mutex::new(Session::default()),
        closing: AtomicBool::new(false),
    });
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let app = router(shared.clone());
    let thread = thread::Builder::new().name("bridge".into()).spawn(move || {
        rt.block_on(async move {
            tokio::select! {
                _ = axum::serve(listener, app) => {}
                _ = rx => {}
            }
        });
        rt.shutdown_timeout(Duration::from_secs(1));
    })?;
    Ok(BridgeServer {
        addr,
        shared,
        stop: Some(tx),
        thread: Some(thread),
    })
}
