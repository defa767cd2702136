//! Live training service: one paced Q-learning session that a human can
//! watch and advise over HTTP.

pub mod server;
pub mod session;

pub use server::{resolve_port, router, serve, DEFAULT_PORT, PORT_ENV};
pub use session::{AdviceAck, Command, SessionConfig, SessionError, SessionManager, SessionState, Status};
