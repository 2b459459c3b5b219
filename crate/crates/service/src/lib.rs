//! Continuous authentication over live sensor streams.
//!
//! Sessions score every completed window against the enrolled user's
//! verifier and threshold, raise warnings on repeated failures and leave
//! every decision to terminate with the operator.

pub mod config;
pub mod http;
pub mod manager;
pub mod session;

use thiserror::Error;

pub use config::ServiceConfig;
pub use manager::{Registry, SessionManager};
pub use session::{Action, Enrollment, EventKind, Session, SessionState, Status, WarningEvent, WarningPolicy};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no enrolled model for user {0}")]
    UnknownUser(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} is terminated")]
    SessionNotActive(String),
    #[error("location {0} is not enrolled for this session")]
    UnknownLocation(String),
    #[error("invalid samples: {0}")]
    InvalidSamples(String),
    #[error("cannot {action:?} a session that is {status:?}")]
    InvalidTransition { action: Action, status: Status },
    #[error("scoring failed: {0}")]
    Scoring(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model directory: {0}")]
    Models(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
