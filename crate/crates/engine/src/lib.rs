//! Streaming quality scorer: a 10 s ring buffer fed from a sample stream,
//! scored once per second with the fast feature set, and a socket service
//! broadcasting the scores.

pub mod bench;
pub mod engine;
pub mod ring;
pub mod schema;
pub mod server;

use thiserror::Error;

pub use engine::{replay, Engine, Ingest, Models, Scorer, Snapshot, BUFFER_CAPACITY};
pub use schema::{Inbound, MarkerMessage, Outbound, ScoreMessage, Vital, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("model: {0}")]
    Model(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("no audio since the previous tick")]
    NoNewAudio,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
