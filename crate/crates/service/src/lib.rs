//! HTTP editing service and command-line front end for `udfcloth`.

pub mod api;
pub mod cli;
pub mod engine;

pub use api::{router, serve, serve_on, AppState, SessionStore};
pub use engine::{EngineConfig, Model};
