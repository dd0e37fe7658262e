//! Mission service: simulated flights that accept mid-air context and
//! re-plan from the drone's current cell, served over HTTP.

pub mod http;
pub mod interpret;
pub mod mission;
pub mod store;

pub use http::{router, ContextRequest, CreatedMission, ErrorEnvelope};
pub use interpret::{interpret_deterministic, InterpretError, LlmInterpreter};
pub use mission::{EventKind, MissionError, MissionEvent, MissionState, Phase};
pub use store::{InterpreterChoice, Journal, MissionStore, MAX_WAIT};

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve(
    store: std::sync::Arc<MissionStore>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "mission service listening");
    axum::serve(listener, router(store)).with_graceful_shutdown(shutdown).await
}
