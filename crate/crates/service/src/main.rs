use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use hymon_service::{load_models_dir, serve, ttl_from_env, AppState};

/// Serve every model in a directory over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value = "models")]
    models_dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let setup = ttl_from_env().and_then(|ttl| Ok((ttl, load_models_dir(&args.models_dir)?)));
    let (ttl, models) = match setup {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let state = Arc::new(AppState::new(models, ttl));
    match serve(state, SocketAddr::new(args.host, args.port)).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
