use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use factstory_core::clock::{Clock, FakeClock, SystemClock};
use factstory_core::pipeline::{run_pipeline, PipelineConfig};
use factstory_core::providers::{ProviderConfig, ProviderMode, Providers};
use factstory_core::retrieval::DEFAULT_MAX_ARTICLES;
use factstory_core::validation::validate_story_document;
use factstory_core::wire::{schema_errors, to_canonical_json};
use factstory_service::api::{router, AppState};
use factstory_service::jobs::{JobTable, DEFAULT_MAX_ACTIVE_JOBS};
use factstory_service::runner::PipelineRunner;
use factstory_service::store::FileStore;

/// Highest exit code `validate` reports.
const MAX_EXIT: usize = 125;

#[derive(Parser)]
#[command(name = "factstory", version, about = "Turn a question into a data story built from online articles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline once and write the story JSON.
    Generate {
        #[arg(long)]
        query: Option<String>,
        /// Directory of `<name>.txt` + `<name>.meta.json` articles used instead of web search.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "live")]
        mode: ProviderMode,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ARTICLES)]
        max_articles: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write intermediate stage outputs here.
        #[arg(long)]
        debug_dir: Option<PathBuf>,
        /// Mock fixtures; defaults to the corpus directory, else `fixtures`.
        #[arg(long)]
        fixture_dir: Option<PathBuf>,
    },
    /// Serve the HTTP API and the frontend bundle.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value = "live")]
        mode: ProviderMode,
        #[arg(long, default_value = "fixtures")]
        fixture_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ACTIVE_JOBS)]
        max_active_jobs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ARTICLES)]
        max_articles: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Check a story file; the exit code is the number of violations.
    Validate { story: PathBuf },
}

fn providers_for(mode: ProviderMode, fixture_dir: &Path) -> Result<Providers, String> {
    let cfg = match mode {
        ProviderMode::Mock => ProviderConfig::mock(fixture_dir),
        ProviderMode::Live => ProviderConfig::from_env(mode, fixture_dir),
    };
    Providers::from_config(&cfg).map_err(|e| e.to_string())
}

fn clock_for(mode: ProviderMode) -> Arc<dyn Clock> {
    match mode {
        ProviderMode::Mock => Arc::new(FakeClock::mock_epoch()),
        ProviderMode::Live => Arc::new(SystemClock::new()),
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    query: Option<String>,
    corpus: Option<PathBuf>,
    mode: ProviderMode,
    seed: u64,
    max_articles: usize,
    out: Option<PathBuf>,
    debug_dir: Option<PathBuf>,
    fixture_dir: Option<PathBuf>,
) -> Result<(), String> {
    let fixtures = fixture_dir.or_else(|| corpus.clone()).unwrap_or_else(|| PathBuf::from("fixtures"));
    let providers = providers_for(mode, &fixtures)?;
    let clock = clock_for(mode);
    let cfg = PipelineConfig { query, corpus, seed, max_articles, debug_dir, ..Default::default() };
    let doc = run_pipeline(&providers, clock.as_ref(), &cfg, &|stage, p| {
        tracing::debug!(?stage, progress = p, "progress");
    })
    .map_err(|e| e.to_string())?;
    let json = to_canonical_json(&doc);
    match out {
        Some(path) => factstory_service::store::write_atomic(&path, json.as_bytes()).map_err(|e| e.to_string())?,
        None => print!("{json}"),
    }
    tracing::info!(story = %doc.story_id, clusters = doc.clusters.len(), units = doc.units.len(), "story written");
    Ok(())
}

fn validate(path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(MAX_EXIT as u8);
        }
    };
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}: not JSON: {e}", path.display());
            return ExitCode::from(MAX_EXIT as u8);
        }
    };
    let mut problems: Vec<String> = schema_errors(&value).into_iter().map(|e| format!("schema: {e}")).collect();
    match serde_json::from_value(value) {
        Ok(doc) => problems.extend(validate_story_document(&doc).iter().map(ToString::to_string)),
        Err(e) if problems.is_empty() => problems.push(format!("schema: {e}")),
        Err(_) => {}
    }
    for p in &problems {
        println!("{p}");
    }
    if problems.is_empty() {
        println!("ok: {}", path.display());
    }
    ExitCode::from(problems.len().min(MAX_EXIT) as u8)
}

#[allow(clippy::too_many_arguments)]
fn serve(
    port: u16,
    host: String,
    data_dir: PathBuf,
    static_dir: Option<PathBuf>,
    mode: ProviderMode,
    fixture_dir: PathBuf,
    max_active_jobs: usize,
    max_articles: usize,
    seed: u64,
) -> Result<(), String> {
    let providers = providers_for(mode, &fixture_dir)?;
    let clock = clock_for(mode);
    let store = FileStore::open(&data_dir).map_err(|e| e.to_string())?;
    let jobs = JobTable::restore(max_active_jobs, store.load_jobs().map_err(|e| e.to_string())?, clock.now_utc());
    let runner = PipelineRunner {
        providers,
        clock: clock.clone(),
        config: PipelineConfig { seed, max_articles, ..Default::default() },
    };
    let state = AppState::new(Arc::new(jobs), store, Arc::new(runner), clock);
    let app = router(state, static_dir);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await.map_err(|e| e.to_string())?;
        tracing::info!(addr = %listener.local_addr().map_err(|e| e.to_string())?, "listening");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Generate { query, corpus, mode, seed, max_articles, out, debug_dir, fixture_dir } => {
            generate(query, corpus, mode, seed, max_articles, out, debug_dir, fixture_dir)
        }
        Command::Serve { port, host, data_dir, static_dir, mode, fixture_dir, max_active_jobs, max_articles, seed } => {
            serve(port, host, data_dir, static_dir, mode, fixture_dir, max_active_jobs, max_articles, seed)
        }
        Command::Validate { story } => return validate(&story),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
