use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use ctxnav_core::bridge::{load_provider_profiles, HttpProvider};
use ctxnav_service::{serve, LlmInterpreter, MissionStore};

use crate::error::{input, CliError};

pub fn build_store(providers: Option<&Path>, journal: Option<&Path>) -> Result<MissionStore, CliError> {
    let mut store = MissionStore::new();
    if let Some(path) = journal {
        store = store.with_journal(path).map_err(|e| input(path, e))?;
    }
    if let Some(path) = providers {
        for profile in load_provider_profiles(path).map_err(|e| input(path, e))? {
            if !profile.is_live() {
                tracing::warn!(provider = %profile.id, "mock providers are not served; skipping");
                continue;
            }
            // Keys are read per request, so a missing one only fails llm calls.
            if !profile.auth_env_var.is_empty() && std::env::var_os(&profile.auth_env_var).is_none() {
                tracing::warn!(provider = %profile.id, var = %profile.auth_env_var, "key variable not set");
            }
            let provider = Arc::new(HttpProvider::new(&profile));
            store = store.with_llm(LlmInterpreter { profile, provider });
        }
    }
    Ok(store)
}

pub fn run(addr: SocketAddr, providers: Option<&Path>, journal: Option<&Path>) -> Result<(), CliError> {
    let store = Arc::new(build_store(providers, journal)?);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Internal(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        // Scripts and tests read the bound port from this line.
        println!("listening on http://{local}");
        let _ = std::io::Write::flush(&mut std::io::stdout());
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        serve(store, listener, shutdown)
            .await
            .map_err(|e| CliError::Internal(format!("serving on {local}: {e}")))
    })
}
