//! Live engine behind an HTTP/WebSocket front end.
//!
//! The engine thread never waits on a client. Each client gets two bounded
//! queues: a short one for state, which simply drops when full, and one
//! holding two seconds of audio. A client whose audio queue fills is
//! disconnected.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::Arc;

use anyhow::Context;
use arc_swap::ArcSwap;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;
use vtforge::engine::{run_live, AudioBlock, Engine, LiveOptions, LiveSession, StateSnapshot};
use vtforge::gesture::{ActivationCell, LiveInput};

use crate::messages::{audio_chunk, pcm_bytes, ControlMessage, StateMessage};

/// Audio blocks a client may fall behind before it is dropped (2 s).
pub const AUDIO_QUEUE_BLOCKS: usize = 200;
/// State messages buffered per client; older ones are not replaced, new
/// ones are dropped.
pub const STATE_QUEUE: usize = 4;

const PLACEHOLDER_PAGE: &str = include_str!("../assets/index.html");

struct Client {
    id: u64,
    audio: mpsc::Sender<Vec<u8>>,
    state: mpsc::Sender<Arc<str>>,
    counter: AtomicU32,
    kicked: Arc<AtomicBool>,
}

#[derive(Default)]
struct Registry {
    clients: ArcSwap<Vec<Arc<Client>>>,
    next_id: AtomicU64,
}

impl Registry {
    fn add(&self, client: Arc<Client>) {
        self.clients.rcu(|list| {
            let mut l = Vec::clone(list);
            l.push(client.clone());
            l
        });
    }

    fn remove(&self, id: u64) {
        self.clients.rcu(|list| {
            list.iter()
                .filter(|c| c.id != id)
                .cloned()
                .collect::<Vec<_>>()
        });
    }

    fn len(&self) -> usize {
        self.clients.load().len()
    }
}

#[derive(Clone)]
struct AppState {
    cell: Arc<ActivationCell>,
    registry: Arc<Registry>,
}

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub addr: Option<SocketAddr>,
    /// Directory holding the built UI; a placeholder page is served without.
    pub ui_dir: Option<PathBuf>,
}

/// Extra observer of every audio block, called on the engine thread.
pub type AudioTap = Box<dyn FnMut(&AudioBlock) + Send>;

pub struct RunningServer {
    pub addr: SocketAddr,
    pub cell: Arc<ActivationCell>,
    registry: Arc<Registry>,
    session: Option<LiveSession>,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn client_count(&self) -> usize {
        self.registry.len()
    }

    /// Stops the engine and the listener.
    pub async fn shutdown(mut self) -> anyhow::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(s) = self.session.take() {
            s.stop();
            tokio::task::spawn_blocking(move || s.join())
                .await?
                .context("engine")?;
        }
        // Dropping the senders ends every connection's writer.
        self.registry.clients.store(Arc::new(Vec::new()));
        (&mut self.task).await??;
        Ok(())
    }

    /// Serves until `stop` resolves or the listener fails, then shuts down.
    pub async fn run_until(
        mut self,
        stop: impl std::future::Future<Output = ()>,
    ) -> anyhow::Result<()> {
        tokio::select! {
            _ = stop => {}
            r = &mut self.task => {
                self.task = tokio::spawn(async { Ok(()) });
                r??;
            }
        }
        self.shutdown().await
    }
}

/// Binds, starts the live engine and serves until shut down.
pub async fn start(
    engine: Engine,
    opts: ServeOptions,
    mut tap: Option<AudioTap>,
) -> anyhow::Result<RunningServer> {
    let addr = opts
        .addr
        .unwrap_or_else(|| SocketAddr::from(([127, 0, 0, 1], 8080)));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    let addr = listener.local_addr()?;

    let cell = Arc::new(ActivationCell::new());
    let registry = Arc::new(Registry::default());
    let app_state = AppState {
        cell: cell.clone(),
        registry: registry.clone(),
    };

    let audio_registry = registry.clone();
    let audio = move |block: AudioBlock| {
        if let Some(t) = tap.as_mut() {
            t(&block);
        }
        let pcm = pcm_bytes(&block.samples);
        for c in audio_registry.clients.load().iter() {
            let n = c.counter.fetch_add(1, Ordering::Relaxed);
            if let Err(e) = c.audio.try_send(audio_chunk(n, &pcm)) {
                if matches!(e, mpsc::error::TrySendError::Full(_)) {
                    log::warn!("client {} fell 2 s behind; disconnecting", c.id);
                }
                c.kicked.store(true, Ordering::Release);
                audio_registry.remove(c.id);
            }
        }
    };
    let state_registry = registry.clone();
    let state = move |snap: StateSnapshot| {
        let clients = state_registry.clients.load();
        if clients.is_empty() {
            return;
        }
        let text: Arc<str> = match serde_json::to_string(&StateMessage::from(&snap)) {
            Ok(t) => t.into(),
            Err(e) => {
                log::error!("state serialization: {e}");
                return;
            }
        };
        for c in clients.iter() {
            let _ = c.state.try_send(text.clone());
        }
    };

    let session = run_live(
        engine,
        LiveInput::new(cell.clone(), false),
        audio,
        state,
        LiveOptions {
            realtime: true,
            max_seconds: None,
        },
    )?;

    let router = Router::new().route("/ws", get(ws_handler));
    let router = match opts.ui_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    };
    let router = router.with_state(app_state);

    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    log::info!("listening on http://{addr}");
    Ok(RunningServer {
        addr,
        cell,
        registry,
        session: Some(session),
        shutdown: Some(tx),
        task,
    })
}

async fn ws_handler(ws: WebSocketUpgrade, State(app): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, app))
}

async fn connection(socket: WebSocket, app: AppState) {
    let (audio_tx, mut audio_rx) = mpsc::channel(AUDIO_QUEUE_BLOCKS);
    let (state_tx, mut state_rx) = mpsc::channel(STATE_QUEUE);
    let kicked = Arc::new(AtomicBool::new(false));
    let id = app.registry.next_id.fetch_add(1, Ordering::Relaxed);
    app.registry.add(Arc::new(Client {
        id,
        audio: audio_tx,
        state: state_tx,
        counter: AtomicU32::new(0),
        kicked: kicked.clone(),
    }));
    log::info!("client {id} connected");

    let (mut sink, mut stream) = socket.split();
    let writer = async {
        loop {
            if kicked.load(Ordering::Acquire) {
                break;
            }
            let msg = tokio::select! {
                biased;
                a = audio_rx.recv() => match a {
                    Some(bytes) => Message::Binary(bytes.into()),
                    None => break,
                },
                s = state_rx.recv() => match s {
                    Some(text) => Message::Text(text.as_ref().into()),
                    None => break,
                },
            };
            if sink.send(msg).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    };
    let reader = async {
        while let Some(msg) = stream.next().await {
            match msg {
                Ok(Message::Text(text)) => match ControlMessage::parse(text.as_str()) {
                    Ok(a) => app.cell.publish(a),
                    Err(e) => log::warn!("client {id}: dropping message: {e}"),
                },
                Ok(Message::Close(_)) | Err(_) => break,
                Ok(_) => {}
            }
        }
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    app.registry.remove(id);
    log::info!("client {id} disconnected");
}
