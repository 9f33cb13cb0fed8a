use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use flowcheck::encoder::Limits;
use flowcheck::fltl::CheckOptions;
use flowcheck::templates::{load_catalog, Catalog};
use flowcheck_service::{router, AppState, Config};

#[derive(Parser)]
#[command(name = "flowcheck-service", version, about = "HTTP API for workflow property checking")]
struct Args {
    #[arg(long, env = "FLOWCHECK_ADDR", default_value = "127.0.0.1")]
    addr: std::net::IpAddr,
    #[arg(long, env = "FLOWCHECK_PORT", default_value_t = 8080)]
    port: u16,
    /// Template catalog merged over the built-ins. Defaults to ./templates.xml if present.
    #[arg(long, env = "FLOWCHECK_TEMPLATES")]
    templates: Option<PathBuf>,
    /// Default token bound for checks that do not name one.
    #[arg(long, default_value_t = 1)]
    bound: u16,
    /// Cap on explored states per model and bound.
    #[arg(long, default_value_t = Limits::default().max_states)]
    max_states: usize,
    #[arg(long, default_value_t = CheckOptions::default().max_product_states)]
    max_product_states: usize,
    /// Directory with the web UI bundle.
    #[arg(long, env = "FLOWCHECK_STATIC")]
    static_dir: Option<PathBuf>,
    /// Directory for saved sessions.
    #[arg(long, env = "FLOWCHECK_DATA")]
    data_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env().add_directive("info".parse()?))
        .init();
    let args = Args::parse();
    let catalog = match args.templates.or_else(|| Some(PathBuf::from("templates.xml")).filter(|p| p.exists())) {
        Some(path) => load_catalog(&path)?,
        None => Catalog::builtin(),
    };
    if let Some(dir) = &args.data_dir {
        std::fs::create_dir_all(dir)?;
    }
    let config = Config {
        default_bound: args.bound,
        max_states: args.max_states,
        max_product_states: args.max_product_states,
        static_dir: args.static_dir,
        data_dir: args.data_dir,
    };
    let app = router(AppState::new(config, catalog));
    let addr = SocketAddr::new(args.addr, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, app).await?;
    Ok(())
}
