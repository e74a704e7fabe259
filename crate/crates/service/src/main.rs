use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use arena_gateway::Gateway;
use arena_service::{router, Arena, ArenaConfig, ArenaOptions};
use clap::Parser;
use tracing_subscriber::EnvFilter;

/// Runs the arena HTTP service.
#[derive(Debug, Parser)]
#[command(name = "arena-server", version)]
struct Args {
    /// Config file (JSON or key = value lines). Without one, three stub CRSs
    /// are served from memory.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Overrides the event log path from the config.
    #[arg(long)]
    storage: Option<PathBuf>,
    /// Fixed seed for matchmaking and side assignment.
    #[arg(long)]
    seed: Option<u64>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(path) => ArenaConfig::load(path)?,
        None => ArenaConfig::with_stubs(),
    };
    if args.storage.is_some() {
        config.storage_path = args.storage;
    }
    let options = ArenaOptions { seed: args.seed, ..ArenaOptions::default() };
    let arena = Arc::new(Arena::open(config, Gateway::new(), options)?);
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "arena listening");
    axum::serve(listener, router(arena)).await?;
    Ok(())
}
