#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};
use vfgrad_core::font::{parse_font, FontModel};
use vfgrad_service::{FontEntry, Hub};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn model(name: &str) -> Arc<FontModel> {
    Arc::new(parse_font(&std::fs::read(fixtures().join(format!("{name}.ttf"))).unwrap()).unwrap())
}

pub fn hub() -> Hub {
    let fonts = ["fix1", "fix3"].iter().map(|n| FontEntry { name: n.to_string(), model: model(n) }).collect();
    Hub::new(fonts)
}

pub fn send(hub: &Hub, msg: Value) -> Value {
    hub.handle_line(&msg.to_string())
}

/// Opens a session and returns its id.
pub fn open(hub: &Hub, font: &str, text: &str) -> String {
    let r = send(hub, json!({"type": "load_font", "payload": {"font": font, "text": text}}));
    assert_eq!(r["type"], "state", "{r}");
    r["session"].as_str().unwrap().to_string()
}

pub fn msg(hub: &Hub, session: &str, kind: &str, payload: Value) -> Value {
    send(hub, json!({"type": kind, "session": session, "payload": payload}))
}

pub fn flat_theta(state: &Value) -> Vec<f64> {
    state["payload"]["theta"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|g| g.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()))
        .collect()
}

pub fn controls(state: &Value) -> Vec<[f64; 2]> {
    state["payload"]["segments"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["controls"].as_array().unwrap().iter().map(|p| [p[0].as_f64().unwrap(), p[1].as_f64().unwrap()]))
        .collect()
}
