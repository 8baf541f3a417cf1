#![allow(dead_code)]

use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use factstory_core::clock::{Clock, FakeClock};
use factstory_core::model::StoryDocument;
use factstory_core::pipeline::{PipelineConfig, Stage};
use factstory_core::providers::{ProviderConfig, Providers};
use factstory_service::api::{router, AppState};
use factstory_service::jobs::{Job, JobTable};
use factstory_service::runner::{PipelineRunner, StoryRunner};
use factstory_service::store::FileStore;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn mock_runner(fixture_dir: &Path) -> PipelineRunner {
    PipelineRunner {
        providers: Providers::from_config(&ProviderConfig::mock(fixture_dir)).unwrap(),
        clock: Arc::new(FakeClock::mock_epoch()),
        config: PipelineConfig::default(),
    }
}

pub fn app(data: &Path, runner: Arc<dyn StoryRunner>, max_active: usize, static_dir: Option<&Path>) -> (Router, AppState) {
    let clock: Arc<dyn Clock> = Arc::new(FakeClock::mock_epoch());
    let state = AppState::new(Arc::new(JobTable::new(max_active)), FileStore::open(data).unwrap(), runner, clock);
    (router(state.clone(), static_dir.map(Path::to_path_buf)), state)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub async fn submit(app: &Router, query: &str) -> String {
    let (status, body) = call_json(app, "POST", "/api/stories", Some(&serde_json::json!({"query": query}).to_string())).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    body["job_id"].as_str().unwrap().to_string()
}

/// Polls a job until it is ready or failed; returns every snapshot seen.
pub async fn wait_terminal(app: &Router, job_id: &str, limit: Duration) -> Vec<Job> {
    let start = Instant::now();
    let mut seen = Vec::new();
    loop {
        let (status, body) = call_json(app, "GET", &format!("/api/jobs/{job_id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let job: Job = serde_json::from_value(body).unwrap();
        let done = job.state.is_terminal();
        seen.push(job);
        if done {
            return seen;
        }
        assert!(start.elapsed() < limit, "job {job_id} did not finish in {limit:?}");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

/// Problems with a sequence of snapshots of one job: state or progress
/// moving backwards, or stage timestamps out of order.
pub fn monotonicity_problems(seen: &[Job]) -> Vec<String> {
    let mut out = Vec::new();
    for w in seen.windows(2) {
        if w[1].state < w[0].state {
            out.push(format!("state went {:?} -> {:?}", w[0].state, w[1].state));
        }
        if w[1].progress < w[0].progress {
            out.push(format!("progress went {} -> {}", w[0].progress, w[1].progress));
        }
    }
    if let Some(last) = seen.last() {
        let times: Vec<_> = last.timestamps.values().collect();
        if times.windows(2).any(|t| t[1] < t[0]) {
            out.push("stage timestamps are not ordered".into());
        }
    }
    out
}

/// Blocks every run until released, so jobs stay active.
#[derive(Default)]
pub struct GatedRunner {
    open: Mutex<bool>,
    cv: Condvar,
}

impl GatedRunner {
    pub fn release(&self) {
        *self.open.lock().unwrap() = true;
        self.cv.notify_all();
    }
}

impl StoryRunner for GatedRunner {
    fn run(&self, _query: &str, progress: &(dyn Fn(Stage, f64) + Sync)) -> Result<StoryDocument, String> {
        progress(Stage::Retrieving, 0.0);
        let guard = self.open.lock().unwrap();
        drop(self.cv.wait_while(guard, |open| !*open).unwrap());
        Err("gate closed the run".into())
    }
}
