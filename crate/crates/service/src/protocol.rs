//! Message envelopes, error replies and the session hub that routes them.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::session::{FontEntry, Session};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message type {0:?}")]
    UnknownType(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("message type {0:?} needs a session")]
    MissingSession(String),
    #[error("unknown font {0:?}")]
    UnknownFont(String),
    #[error("bad payload: {0}")]
    BadPayload(String),
    #[error("{0}")]
    Invalid(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Malformed(_) => "malformed",
            ProtocolError::UnknownType(_) => "unknown_type",
            ProtocolError::UnknownSession(_) => "unknown_session",
            ProtocolError::MissingSession(_) => "missing_session",
            ProtocolError::UnknownFont(_) => "unknown_font",
            ProtocolError::BadPayload(_) => "bad_payload",
            ProtocolError::Invalid(_) => "invalid",
            ProtocolError::Solver(_) => "solver",
        }
    }
}

pub const MESSAGE_TYPES: [&str; 10] = [
    "load_font",
    "set_text",
    "set_axes",
    "pick",
    "drag",
    "add_constraint",
    "remove_constraint",
    "set_collision",
    "step_sim",
    "state",
];

/// A parsed client message. `cancel` is attached to drags when they are
/// queued so a later drag can preempt them.
#[derive(Clone, Debug)]
pub struct Request {
    pub kind: String,
    pub session: Option<String>,
    pub id: Option<Value>,
    pub payload: Value,
    pub cancel: Option<Arc<AtomicBool>>,
}

/// Error that still knows which message it answers.
#[derive(Clone, Debug)]
pub struct Rejection {
    pub session: Option<String>,
    pub id: Option<Value>,
    pub error: ProtocolError,
}

pub fn parse_request(line: &str) -> Result<Request, Rejection> {
    let reject = |session, id, error| Rejection { session, id, error };
    let value: Value =
        serde_json::from_str(line).map_err(|e| reject(None, None, ProtocolError::Malformed(e.to_string())))?;
    let Value::Object(mut obj) = value else {
        return Err(reject(None, None, ProtocolError::Malformed("expected a JSON object".into())));
    };
    let id = obj.remove("id");
    let session = match obj.remove("session") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(reject(None, id, ProtocolError::Malformed("session must be a string".into()))),
    };
    let kind = match obj.remove("type") {
        Some(Value::String(s)) => s,
        _ => return Err(reject(session, id, ProtocolError::Malformed("missing string field \"type\"".into()))),
    };
    let payload = obj.remove("payload").unwrap_or(Value::Null);
    if let Some(extra) = obj.keys().next() {
        return Err(reject(session, id, ProtocolError::Malformed(format!("unexpected field {extra:?}"))));
    }
    if !MESSAGE_TYPES.contains(&kind.as_str()) {
        return Err(reject(session, id, ProtocolError::UnknownType(kind)));
    }
    if !(payload.is_object() || payload.is_null()) {
        return Err(reject(session, id, ProtocolError::BadPayload("payload must be an object".into())));
    }
    Ok(Request { kind, session, id, payload, cancel: None })
}

fn envelope(kind: &str, session: Option<&str>, id: Option<&Value>, payload: Value) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), Value::String(kind.into()));
    m.insert("session".into(), session.map_or(Value::Null, |s| Value::String(s.into())));
    if let Some(id) = id {
        m.insert("id".into(), id.clone());
    }
    m.insert("payload".into(), payload);
    Value::Object(m)
}

pub fn error_reply(r: &Rejection) -> Value {
    envelope(
        "error",
        r.session.as_deref(),
        r.id.as_ref(),
        json!({"code": r.error.code(), "message": r.error.to_string()}),
    )
}

struct Slot {
    session: Mutex<Session>,
    pending_drag: Mutex<Option<Arc<AtomicBool>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// All sessions of a server. Fonts are shared read-only between sessions.
pub struct Hub {
    fonts: Vec<FontEntry>,
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
    counter: AtomicU64,
}

impl Hub {
    pub fn new(fonts: Vec<FontEntry>) -> Hub {
        Hub { fonts, sessions: Mutex::new(HashMap::new()), counter: AtomicU64::new(0) }
    }

    pub fn font_names(&self) -> Vec<String> {
        self.fonts.iter().map(|f| f.name.clone()).collect()
    }

    fn slot(&self, id: &str) -> Option<Arc<Slot>> {
        lock(&self.sessions).get(id).cloned()
    }

    pub fn session_count(&self) -> usize {
        lock(&self.sessions).len()
    }

    pub fn close_session(&self, id: &str) {
        lock(&self.sessions).remove(id);
    }

    /// Called when a drag is queued: cancels the session's in-flight drag and
    /// registers a flag for the new one.
    pub fn preempt(&self, request: &mut Request) {
        if request.kind != "drag" {
            return;
        }
        let flag = Arc::new(AtomicBool::new(false));
        if let Some(slot) = request.session.as_deref().and_then(|s| self.slot(s)) {
            if let Some(old) = lock(&slot.pending_drag).replace(flag.clone()) {
                old.store(true, Ordering::Relaxed);
            }
        }
        request.cancel = Some(flag);
    }

    /// Handles one request; always returns exactly one reply.
    pub fn handle(&self, request: &Request) -> Value {
        match self.dispatch(request) {
            Ok((session, kind, payload)) => envelope(kind, Some(&session), request.id.as_ref(), payload),
            Err(error) => error_reply(&Rejection { session: request.session.clone(), id: request.id.clone(), error }),
        }
    }

    /// Parses and handles one line of client input.
    pub fn handle_line(&self, line: &str) -> Value {
        match parse_request(line) {
            Ok(mut r) => {
                self.preempt(&mut r);
                self.handle(&r)
            }
            Err(rej) => error_reply(&rej),
        }
    }

    fn load_font(&self, request: &Request) -> Result<(String, &'static str, Value), ProtocolError> {
        let name = match request.payload.get("font") {
            Some(Value::String(s)) => s.clone(),
            None | Some(Value::Null) if self.fonts.len() == 1 => self.fonts[0].name.clone(),
            None | Some(Value::Null) => return Err(ProtocolError::BadPayload("payload.font is required".into())),
            Some(_) => return Err(ProtocolError::BadPayload("payload.font must be a string".into())),
        };
        if let Some(Value::Object(m)) = Some(&request.payload) {
            if let Some(k) = m.keys().find(|k| *k != "font" && *k != "text") {
                return Err(ProtocolError::BadPayload(format!("unknown field {k:?}")));
            }
        }
        let entry = self.fonts.iter().find(|f| f.name == name).ok_or(ProtocolError::UnknownFont(name))?;
        let id = match &request.session {
            Some(s) => {
                if self.slot(s).is_none() {
                    return Err(ProtocolError::UnknownSession(s.clone()));
                }
                s.clone()
            }
            None => format!("s{}", self.counter.fetch_add(1, Ordering::Relaxed) + 1),
        };
        let mut session = Session::new(id.clone(), entry);
        let state = match request.payload.get("text") {
            Some(t) => session.set_text(&json!({"text": t}))?,
            None => session.state(),
        };
        let slot = Arc::new(Slot { session: Mutex::new(session), pending_drag: Mutex::new(None) });
        lock(&self.sessions).insert(id.clone(), slot);
        Ok((id, "state", state))
    }

    fn dispatch(&self, request: &Request) -> Result<(String, &'static str, Value), ProtocolError> {
        if request.kind == "load_font" {
            return self.load_font(request);
        }
        let id = request.session.clone().ok_or_else(|| ProtocolError::MissingSession(request.kind.clone()))?;
        let slot = self.slot(&id).ok_or_else(|| ProtocolError::UnknownSession(id.clone()))?;
        let mut session = lock(&slot.session);
        let p = &request.payload;
        let out = match request.kind.as_str() {
            "set_text" => ("state", session.set_text(p)?),
            "set_axes" => ("state", session.set_axes(p)?),
            "pick" => ("pick", session.pick(p)?),
            "drag" => {
                let result = session.drag(p, request.cancel.as_deref());
                let mut pending = lock(&slot.pending_drag);
                if pending.as_ref().zip(request.cancel.as_ref()).is_some_and(|(a, b)| Arc::ptr_eq(a, b)) {
                    *pending = None;
                }
                ("state", result?)
            }
            "add_constraint" => ("state", session.add_constraint(p)?),
            "remove_constraint" => ("state", session.remove_constraint(p)?),
            "set_collision" => ("state", session.set_collision(p)?),
            "step_sim" => ("state", session.step_sim(p)?),
            "state" => {
                if !(p.is_null() || p.as_object().is_some_and(|m| m.is_empty())) {
                    return Err(ProtocolError::BadPayload("state takes no payload".into()));
                }
                ("state", session.state())
            }
            other => return Err(ProtocolError::UnknownType(other.to_string())),
        };
        Ok((id, out.0, out.1))
    }
}
