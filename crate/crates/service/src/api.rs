//! HTTP routes.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use factstory_core::clock::Clock;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::jobs::{JobError, JobState, JobTable};
use crate::runner::StoryRunner;
use crate::store::{FileStore, StoreError};

#[derive(Clone)]
pub struct AppState {
    pub jobs: Arc<JobTable>,
    pub store: FileStore,
    pub runner: Arc<dyn StoryRunner>,
    pub clock: Arc<dyn Clock>,
    save_lock: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(jobs: Arc<JobTable>, store: FileStore, runner: Arc<dyn StoryRunner>, clock: Arc<dyn Clock>) -> Self {
        Self { jobs, store, runner, clock, save_lock: Arc::new(Mutex::new(())) }
    }

    /// Snapshot and write the jobs index; serialized so that an older
    /// snapshot never overwrites a newer one.
    fn persist_jobs(&self) {
        let _guard = self.save_lock.lock().unwrap();
        if let Err(e) = self.store.save_jobs(&self.jobs.all()) {
            tracing::error!(error = %e, "could not write jobs index");
        }
    }

    /// Runs one job to completion on the calling thread.
    pub fn run_job(&self, job_id: &str, query: &str) {
        let progress = |stage: factstory_core::pipeline::Stage, p: f64| {
            let state = JobState::from(stage);
            let before = self.jobs.get(job_id).map(|j| j.state).ok();
            if self.jobs.advance(job_id, state, p, self.clock.now_utc()).is_ok() && before != Some(state) {
                tracing::info!(job = job_id, ?state, "job advanced");
                self.persist_jobs();
            }
        };
        let outcome = self.runner.run(query, &progress).and_then(|doc| {
            self.store.put_story(&doc).map_err(|e| e.to_string())?;
            Ok(doc.story_id)
        });
        let now = self.clock.now_utc();
        let result = match outcome {
            Ok(story_id) => self.jobs.finish(job_id, &story_id, now),
            Err(detail) => {
                tracing::warn!(job = job_id, %detail, "job failed");
                self.jobs.fail(job_id, &detail, now)
            }
        };
        if let Err(e) = result {
            tracing::error!(job = job_id, error = %e, "could not record job outcome");
        }
        self.persist_jobs();
    }
}

struct ApiError(StatusCode, String, &'static str);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1, "kind": self.2}))).into_response()
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> Self {
        let (status, kind) = match &e {
            JobError::InvalidQuery(_) => (StatusCode::BAD_REQUEST, "InvalidQuery"),
            JobError::TooManyActiveJobs { .. } => (StatusCode::TOO_MANY_REQUESTS, "TooManyActiveJobs"),
            JobError::NotFound(_) => (StatusCode::NOT_FOUND, "NotFound"),
            JobError::InvalidTransition { .. } => (StatusCode::CONFLICT, "InvalidTransition"),
        };
        ApiError(status, e.to_string(), kind)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::NotFound(_) | StoreError::InvalidId(_) => ApiError(StatusCode::NOT_FOUND, e.to_string(), "NotFound"),
            StoreError::Io { .. } => ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), "Storage"),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CreateStory {
    query: String,
}

async fn create_story(State(state): State<AppState>, body: Option<Json<CreateStory>>) -> Result<impl IntoResponse, ApiError> {
    let Some(Json(body)) = body else {
        return Err(ApiError(StatusCode::BAD_REQUEST, "expected a JSON body {\"query\": \"...\"}".into(), "InvalidQuery"));
    };
    let job = state.jobs.create(&body.query, state.clock.now_utc())?;
    state.persist_jobs();
    tracing::info!(job = %job.job_id, query = %job.query, "job queued");
    let worker = state.clone();
    let (id, query) = (job.job_id.clone(), job.query.clone());
    tokio::task::spawn_blocking(move || worker.run_job(&id, &query));
    Ok((StatusCode::ACCEPTED, Json(json!({"job_id": job.job_id}))))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(state.jobs.get(&id)?))
}

fn read_story(state: &AppState, id: &str) -> Result<String, ApiError> {
    state.store.get_story(id).map_err(|e| {
        let referenced = state.jobs.all().iter().any(|j| j.story_id.as_deref() == Some(id));
        if matches!(e, StoreError::NotFound(_)) && referenced {
            tracing::warn!(story = id, "story file is missing from the data directory");
        }
        ApiError::from(e)
    })
}

async fn get_story(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let text = read_story(&state, &id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text))
}

async fn get_articles(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let text = read_story(&state, &id)?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, format!("stored story {id} is corrupt: {e}"), "Storage"))?;
    Ok(Json(doc["articles"].clone()))
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/stories", post(create_story))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/stories/{id}", get(get_story))
        .route("/api/stories/{id}/articles", get(get_articles))
        .route("/healthz", get(healthz))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
