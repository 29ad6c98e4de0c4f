use std::path::PathBuf;
use std::process::ExitCode;

use optimshare_service::{router, AppState, Tokens, DEFAULT_WORKERS};

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let store_dir = std::env::var_os("OPTIM_STORE_DIR").map_or_else(|| PathBuf::from("optimshare-store"), PathBuf::from);
    let Some(tokens_file) = std::env::var_os("OPTIM_TOKENS_FILE") else {
        eprintln!("OPTIM_TOKENS_FILE must point at a `token role` file");
        return ExitCode::from(2);
    };
    let tokens = match Tokens::load(tokens_file.as_ref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("tokens: {e}");
            return ExitCode::from(2);
        }
    };
    let addr = std::env::var("OPTIM_BIND_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let state = match AppState::start(&store_dir, tokens, DEFAULT_WORKERS) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("store: {e}");
            return ExitCode::from(1);
        }
    };
    let listener = match tokio::net::TcpListener::bind(&addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("bind {addr}: {e}");
            return ExitCode::from(1);
        }
    };
    log::info!("listening on {addr}, store {}", store_dir.display());
    if let Err(e) = axum::serve(listener, router(state)).await {
        eprintln!("server: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
