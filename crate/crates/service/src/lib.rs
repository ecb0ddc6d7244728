//! Session server for interactive editing of variable-font instances.
//!
//! Clients talk newline-delimited JSON over a WebSocket at `/ws`; the message
//! schema is described in `PROTOCOL.md` next to this crate.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{Hub, ProtocolError};
pub use server::{load_fonts, router, serve};
pub use session::{FontEntry, Session};
