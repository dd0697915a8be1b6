use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use nexthint_core::catalog::{load_catalog, RunnerConfig};
use nexthint_core::llm::LlmClient;
use nexthint_server::{router, AppState, EventStore};
use tracing_subscriber::EnvFilter;

/// Serve exercises, hints, ratings and solution checks over HTTP.
#[derive(Parser, Debug)]
#[command(name = "nexthint-server", version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory for the per-session event logs.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Extra exercise definitions (*.json).
    #[arg(long)]
    catalog_dir: Option<PathBuf>,
    /// Serve only the exercises from --catalog-dir.
    #[arg(long)]
    no_builtins: bool,
    /// Use the deterministic offline backend instead of the API.
    #[arg(long)]
    mock_llm: bool,
    #[arg(long, default_value_t = 0)]
    mock_seed: u64,
    /// TOML file with a [runner] table.
    #[arg(long)]
    runner_config: Option<PathBuf>,
}

async fn run(args: Args) -> Result<(), String> {
    let catalog = load_catalog(args.catalog_dir.as_deref(), !args.no_builtins).map_err(|e| e.to_string())?;
    let runner = RunnerConfig::resolve(args.runner_config.as_deref()).map_err(|e| e.to_string())?;
    let llm = if args.mock_llm {
        LlmClient::mock(args.mock_seed)
    } else {
        LlmClient::from_env().map_err(|e| format!("{e} (use --mock-llm to run offline)"))?
    };
    let store = EventStore::open(&args.data_dir).map_err(|e| e.to_string())?;
    tracing::info!(
        exercises = catalog.len(),
        backend = llm.backend_name(),
        data_dir = %args.data_dir.display(),
        "starting"
    );
    let state = AppState {
        catalog: Arc::new(catalog),
        llm,
        runner: Arc::new(runner),
        store: Arc::new(store),
    };
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| format!("invalid address: {e}"))?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("{addr}: {e}"))?;
    tracing::info!("listening on http://{}", listener.local_addr().map_err(|e| e.to_string())?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    match run(Args::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nexthint-server: {e}");
            ExitCode::FAILURE
        }
    }
}
