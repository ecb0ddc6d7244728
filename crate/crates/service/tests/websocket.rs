//! Live server tests over a real socket.

mod common;

use std::sync::Arc;
use std::time::Duration;

use common::*;
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};
use vfgrad_service::{serve, Hub};

type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(assets: Option<std::path::PathBuf>) -> (String, Arc<Hub>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let hub = Arc::new(hub());
    tokio::spawn(serve(listener, hub.clone(), assets));
    (addr.to_string(), hub)
}

async fn connect(addr: &str) -> Client {
    connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn recv(c: &mut Client) -> Value {
    loop {
        let m = tokio::time::timeout(Duration::from_secs(30), c.next()).await.expect("reply in time").unwrap().unwrap();
        if let Message::Text(t) = m {
            assert!(t.ends_with('\n'));
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn call(c: &mut Client, v: Value) -> Value {
    c.send(Message::Text(v.to_string().into())).await.unwrap();
    recv(c).await
}

async fn get(addr: &str, path: &str) -> String {
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(format!("GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").as_bytes()).await.unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).await.unwrap();
    out
}

fn script(session: &str, k: usize) -> Vec<Value> {
    let w = 0.1 * (k as f64 + 1.0);
    vec![
        json!({"type": "set_axes", "session": session, "payload": {"axes": {"wght": w}, "normalized": true}}),
        json!({"type": "drag", "session": session, "payload": {"segment": 2, "t": 0.5, "x": 150.0 + 10.0 * k as f64, "y": 760.0}}),
        json!({"type": "add_constraint", "session": session, "payload": {"kind": "pin", "handles": [{"segment": 0, "t": 0.0}]}}),
        json!({"type": "drag", "session": session, "payload": {"segment": 5, "t": 0.25, "x": 420.0, "y": 300.0 + 20.0 * k as f64}}),
        json!({"type": "set_collision", "session": session, "payload": {"enabled": k % 2 == 0, "scene": "wall -1000 -20 2000 -20"}}),
        json!({"type": "drag", "session": session, "payload": {"segment": 1, "t": 0.5, "x": 240.0, "y": 350.0}}),
        json!({"type": "state", "session": session}),
    ]
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_clients_stay_isolated() {
    let (addr, _hub) = start(None).await;
    let mut tasks = Vec::new();
    for k in 0..4 {
        let addr = addr.clone();
        tasks.push(tokio::spawn(async move {
            let mut c = connect(&addr).await;
            let r = call(&mut c, json!({"type": "load_font", "payload": {"font": "fix3", "text": "IL"}})).await;
            let session = r["session"].as_str().unwrap().to_string();
            let mut last = Value::Null;
            for (i, mut m) in script(&session, k).into_iter().enumerate() {
                m["id"] = json!(i);
                last = call(&mut c, m).await;
                assert_eq!(last["id"], json!(i));
                assert_eq!(last["session"], session.as_str());
                assert_eq!(last["type"], "state", "{last}");
                tokio::task::yield_now().await;
            }
            (k, last["payload"].clone())
        }));
    }
    for t in tasks {
        let (k, remote) = t.await.unwrap();
        // replaying the same script alone gives the same state
        let local = hub();
        let s = open(&local, "fix3", "IL");
        let mut last = Value::Null;
        for m in script(&s, k) {
            last = send(&local, m);
        }
        assert_eq!(remote, last["payload"], "client {k}");
    }
}

#[tokio::test]
async fn malformed_traffic_keeps_the_connection() {
    let (addr, _hub) = start(None).await;
    let mut c = connect(&addr).await;
    let s = call(&mut c, json!({"type": "load_font", "payload": {"font": "fix1", "text": "I"}})).await["session"]
        .as_str()
        .unwrap()
        .to_string();
    let junk = ["{", "[]", "null", "\"x\"", "{\"type\":1}", "{\"type\":\"drag\"}", "{\"type\":\"pick\",\"session\":\"zz\"}", "\u{0}\u{1}", "{\"a\":}"];
    for i in 0..1000 {
        c.send(Message::Text(junk[i % junk.len()].to_string().into())).await.unwrap();
    }
    for _ in 0..1000 {
        assert_eq!(recv(&mut c).await["type"], "error");
    }
    c.send(Message::Binary(vec![1, 2, 3].into())).await.unwrap();
    assert_eq!(recv(&mut c).await["payload"]["code"], "malformed");
    let r = call(&mut c, json!({"type": "state", "session": s})).await;
    assert_eq!(r["type"], "state");
}

#[tokio::test]
async fn one_frame_may_carry_several_lines() {
    let (addr, _hub) = start(None).await;
    let mut c = connect(&addr).await;
    let s = call(&mut c, json!({"type": "load_font", "payload": {"font": "fix3", "text": "I"}})).await["session"]
        .as_str()
        .unwrap()
        .to_string();
    let lines = format!(
        "{}\n{}\n\n{}\n",
        json!({"type": "pick", "session": s, "id": "a", "payload": {"x": 150, "y": 700}}),
        json!({"type": "set_axes", "session": s, "id": "b", "payload": {"axes": {"wght": 900}}}),
        json!({"type": "state", "session": s, "id": "c"}),
    );
    c.send(Message::Text(lines.into())).await.unwrap();
    let ids: Vec<Value> = [recv(&mut c).await, recv(&mut c).await, recv(&mut c).await].iter().map(|r| r["id"].clone()).collect();
    assert_eq!(ids, vec![json!("a"), json!("b"), json!("c")]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn back_to_back_drags_all_reply() {
    let (addr, _hub) = start(None).await;
    let mut c = connect(&addr).await;
    let s = call(&mut c, json!({"type": "load_font", "payload": {"font": "fix3", "text": "IL"}})).await["session"]
        .as_str()
        .unwrap()
        .to_string();
    for i in 0..5 {
        let m = json!({"type": "drag", "session": s, "id": i, "payload": {"segment": 2, "t": 0.5, "x": 150.0, "y": 700.0 + 30.0 * i as f64, "iterations": 200}});
        c.send(Message::Text(m.to_string().into())).await.unwrap();
    }
    let mut replies = Vec::new();
    for _ in 0..5 {
        replies.push(recv(&mut c).await);
    }
    for (i, r) in replies.iter().enumerate() {
        assert_eq!(r["id"], json!(i));
        assert_eq!(r["type"], "state");
    }
    // only the last drag is never preempted
    assert_eq!(replies[4]["payload"]["drag"]["cancelled"], false);
}

#[tokio::test]
async fn sessions_close_with_their_connection() {
    let (addr, hub) = start(None).await;
    let mut c = connect(&addr).await;
    call(&mut c, json!({"type": "load_font", "payload": {"font": "fix1"}})).await;
    call(&mut c, json!({"type": "load_font", "payload": {"font": "fix3"}})).await;
    assert_eq!(hub.session_count(), 2);
    c.close(None).await.unwrap();
    for _ in 0..100 {
        if hub.session_count() == 0 {
            return;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("sessions still open: {}", hub.session_count());
}

#[tokio::test]
async fn static_assets_are_served() {
    let (addr, _hub) = start(None).await;
    let page = get(&addr, "/").await;
    assert!(page.starts_with("HTTP/1.1 200"), "{page}");
    assert!(page.contains("/ws"));
    let dir = std::env::temp_dir().join(format!("vfgrad-assets-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<p>editor</p>").unwrap();
    std::fs::write(dir.join("app.js"), "console.log(1)").unwrap();
    let (addr, _hub) = start(Some(dir.clone())).await;
    assert!(get(&addr, "/").await.contains("<p>editor</p>"));
    assert!(get(&addr, "/app.js").await.contains("console.log(1)"));
    assert!(get(&addr, "/missing.js").await.starts_with("HTTP/1.1 404"));
    let mut c = connect(&addr).await;
    assert_eq!(call(&mut c, json!({"type": "load_font", "payload": {"font": "fix1"}})).await["type"], "state");
    std::fs::remove_dir_all(&dir).ok();
}
