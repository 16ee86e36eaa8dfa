//! Line-delimited JSON protocol exposing episode reset/step to external
//! processes over standard streams or TCP.
//!
//! Every request is one JSON object on one line with a `cmd` field (`info`,
//! `reset`, `step`, `action_mask`, `trace`, `close`); every response is one
//! line with `"ok": true` plus a payload, or `"ok": false` and an `error`.

pub mod codec;
pub mod server;
pub mod session;

pub use codec::{decode_actions, encode_actions, encode_observation, DecodeError};
pub use server::{bind_tcp, serve_listener, serve_stdio, serve_stream, DEFAULT_MAX_SESSIONS};
pub use session::{info, Reply, Session, SessionDefaults, PROTOCOL_VERSION};
