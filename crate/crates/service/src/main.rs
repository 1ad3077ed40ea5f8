use std::path::PathBuf;
use std::process::ExitCode;

use taxiguard_service::{build_state, router, ServiceConfig};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::from_default_env()).with_writer(std::io::stderr).init();

    let mut args = std::env::args().skip(1);
    let mut config_path = std::env::var_os("TAXIGUARD_CONFIG").map(PathBuf::from);
    while let Some(a) = args.next() {
        match a.as_str() {
            "--config" | "-c" => config_path = args.next().map(PathBuf::from),
            "--help" | "-h" => {
                eprintln!("usage: taxiguard-service [--config FILE]\nenvironment: TAXIGUARD_BIND, TAXIGUARD_MAP, TAXIGUARD_CALIBRATION, TAXIGUARD_SNAPSHOT, TAXIGUARD_TOKEN, TAXIGUARD_WARN_A, TAXIGUARD_WARN_B, TAXIGUARD_DAY_WINDOW, TAXIGUARD_MODE");
                return ExitCode::SUCCESS;
            }
            other => {
                eprintln!("unknown argument {other}");
                return ExitCode::from(1);
            }
        }
    }

    let cfg = match ServiceConfig::load(config_path.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config: {e}");
            return ExitCode::from(1);
        }
    };
    let state = match build_state(&cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("startup: {e}");
            return ExitCode::from(1);
        }
    };
    let listener = match tokio::net::TcpListener::bind(&cfg.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("bind {}: {e}", cfg.bind);
            return ExitCode::from(2);
        }
    };
    tracing::info!("listening on {}", cfg.bind);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await {
        eprintln!("server: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
