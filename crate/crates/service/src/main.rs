use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use groupopt_service::{router, AppState};

#[derive(Parser)]
#[command(name = "groupopt-service", version, about = "HTTP API for panel upload, allocation runs and reports")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Directory receiving a copy of every completed run's outputs.
    #[arg(long)]
    spool: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let state = match args.spool {
        Some(dir) => AppState::with_spool(dir),
        None => AppState::new(),
    };
    let listener = tokio::net::TcpListener::bind(args.bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
