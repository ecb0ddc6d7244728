//! HTTP and WebSocket transport.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tower_http::services::ServeDir;
use vfgrad_core::font::parse_font;

use crate::protocol::{error_reply, parse_request, Hub, ProtocolError, Rejection, Request};
use crate::session::FontEntry;

const INDEX: &str = "<!doctype html>\n<title>vfgrad</title>\n<p>Editor assets are not installed. \
Connect a client to <code>/ws</code>; see PROTOCOL.md.</p>\n";

/// Loads fonts for serving; each is addressed by its file stem.
pub fn load_fonts(paths: &[PathBuf]) -> Result<Vec<FontEntry>, String> {
    let mut out: Vec<FontEntry> = Vec::new();
    for path in paths {
        let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let model = parse_font(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if out.iter().any(|f| f.name == name) {
            return Err(format!("two fonts are named {name:?}"));
        }
        out.push(FontEntry { name, model: Arc::new(model) });
    }
    Ok(out)
}

pub fn router(hub: Arc<Hub>, assets: Option<&Path>) -> Router {
    let app = Router::new().route("/ws", get(upgrade)).with_state(hub);
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(INDEX) })),
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, hub: Arc<Hub>, assets: Option<PathBuf>) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(hub, assets.as_deref())).await
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Arc<Hub>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, hub))
}

fn text(v: &Value) -> Message {
    let mut s = v.to_string();
    s.push('\n');
    Message::Text(s.into())
}

/// Messages of one connection are handled in order by a single worker; only
/// drag preemption happens as soon as a message is read.
async fn connection(mut socket: WebSocket, hub: Arc<Hub>) {
    let (reply_tx, mut reply_rx) = mpsc::unbounded_channel::<Value>();
    let (work_tx, mut work_rx) = mpsc::unbounded_channel::<Request>();
    let worker_hub = hub.clone();
    let worker_tx = reply_tx.clone();
    let worker = tokio::spawn(async move {
        let mut created = Vec::new();
        while let Some(request) = work_rx.recv().await {
            let h = worker_hub.clone();
            let reply = match tokio::task::spawn_blocking(move || h.handle(&request)).await {
                Ok(v) => v,
                Err(e) => error_reply(&Rejection {
                    session: None,
                    id: None,
                    error: ProtocolError::Invalid(format!("handler crashed: {e}")),
                }),
            };
            if reply["type"] != "error" {
                if let Some(s) = reply["session"].as_str() {
                    if !created.iter().any(|c: &String| c == s) {
                        created.push(s.to_string());
                    }
                }
            }
            if worker_tx.send(reply).is_err() {
                break;
            }
        }
        created
    });
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let Some(Ok(msg)) = incoming else { break };
                match msg {
                    Message::Text(t) => {
                        for line in t.as_str().lines().filter(|l| !l.trim().is_empty()) {
                            match parse_request(line) {
                                Ok(mut request) => {
                                    hub.preempt(&mut request);
                                    let _ = work_tx.send(request);
                                }
                                Err(rej) => {
                                    let _ = reply_tx.send(error_reply(&rej));
                                }
                            }
                        }
                    }
                    Message::Binary(_) => {
                        let rej = Rejection {
                            session: None,
                            id: None,
                            error: ProtocolError::Malformed("binary frames are not supported".into()),
                        };
                        let _ = reply_tx.send(error_reply(&rej));
                    }
                    Message::Close(_) => break,
                    Message::Ping(_) | Message::Pong(_) => {}
                }
            }
            Some(reply) = reply_rx.recv() => {
                if socket.send(text(&reply)).await.is_err() {
                    break;
                }
            }
        }
    }
    drop(work_tx);
    if let Ok(created) = worker.await {
        for id in created {
            hub.close_session(&id);
        }
    }
}
