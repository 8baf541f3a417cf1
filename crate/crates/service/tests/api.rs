mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::http::StatusCode;
use common::*;
use factstory_core::wire::{from_json, schema_errors};
use factstory_service::jobs::JobState;
use factstory_testkit::{fixture, golden_story_path};

const LIMIT: Duration = Duration::from_secs(60);

#[tokio::test(flavor = "multi_thread")]
async fn job_runs_to_ready_and_story_is_served() {
    let data = tempfile::tempdir().unwrap();
    let (app, _) = app(data.path(), Arc::new(mock_runner(&fixture("web"))), 2, None);
    let job_id = submit(&app, "homeschooling statistics").await;
    let seen = wait_terminal(&app, &job_id, LIMIT).await;
    assert!(monotonicity_problems(&seen).is_empty(), "{:?}", monotonicity_problems(&seen));
    let last = seen.last().unwrap();
    assert_eq!(last.state, JobState::Ready, "{:?}", last.error_detail);
    assert_eq!(last.progress, 1.0);
    let stages: Vec<JobState> = last.timestamps.keys().copied().collect();
    assert_eq!(
        stages,
        [JobState::Queued, JobState::Retrieving, JobState::Extracting, JobState::Organizing, JobState::Composing, JobState::Ready]
    );

    let story_id = last.story_id.clone().unwrap();
    let (status, bytes) = call(&app, "GET", &format!("/api/stories/{story_id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert!(schema_errors(&value).is_empty());
    let doc = from_json(std::str::from_utf8(&bytes).unwrap()).unwrap();
    assert_eq!(doc.story_id, story_id);

    let (status, articles) = call_json(&app, "GET", &format!("/api/stories/{story_id}/articles"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(articles.as_array().unwrap().len(), doc.articles.len());

    let index: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(data.path().join("jobs.json")).unwrap()).unwrap();
    assert_eq!(index[0]["state"], "ready");
}

#[tokio::test(flavor = "multi_thread")]
async fn failing_retrieval_marks_the_job_failed() {
    let data = tempfile::tempdir().unwrap();
    let (app, _) = app(data.path(), Arc::new(mock_runner(&fixture("web-offline"))), 2, None);
    let job_id = submit(&app, "homeschooling statistics").await;
    let seen = wait_terminal(&app, &job_id, LIMIT).await;
    let last = seen.last().unwrap();
    assert_eq!(last.state, JobState::Failed);
    assert!(last.error_detail.as_deref().unwrap().contains("AllFetchesFailed"), "{:?}", last.error_detail);
    assert!(last.story_id.is_none());
    assert!(monotonicity_problems(&seen).is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn request_validation_and_cap() {
    let data = tempfile::tempdir().unwrap();
    let gate = Arc::new(GatedRunner::default());
    let (app, state) = app(data.path(), gate.clone(), 2, None);

    let (status, body) = call_json(&app, "POST", "/api/stories", Some(r#"{"query": "   "}"#)).await;
    assert_eq!((status, body["kind"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidQuery")));
    let (status, _) = call_json(&app, "POST", "/api/stories", Some("not json")).await;
    assert!(status.is_client_error());
    let long = "q".repeat(501);
    let (status, _) = call_json(&app, "POST", "/api/stories", Some(&serde_json::json!({"query": long}).to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let first = submit(&app, "first").await;
    let (_, job) = call_json(&app, "GET", &format!("/api/jobs/{first}"), None).await;
    assert!(matches!(job["state"].as_str(), Some("queued" | "retrieving")));
    submit(&app, "second").await;
    let (status, body) = call_json(&app, "POST", "/api/stories", Some(r#"{"query": "third"}"#)).await;
    assert_eq!((status, body["kind"].as_str()), (StatusCode::TOO_MANY_REQUESTS, Some("TooManyActiveJobs")));
    assert_eq!(state.jobs.active_count(), 2);

    gate.release();
    let seen = wait_terminal(&app, &first, LIMIT).await;
    assert_eq!(seen.last().unwrap().state, JobState::Failed);
    wait_terminal(&app, "j2", LIMIT).await;
    submit(&app, "third").await;
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_and_deleted_resources_are_not_found() {
    let data = tempfile::tempdir().unwrap();
    let (app, _) = app(data.path(), Arc::new(mock_runner(&fixture("web"))), 2, None);
    for uri in ["/api/jobs/j42", "/api/jobs/nope", "/api/stories/s0000", "/api/stories/..%2Fjobs", "/api/stories/s0000/articles"] {
        let (status, body) = call_json(&app, "GET", uri, None).await;
        assert_eq!((status, body["kind"].as_str()), (StatusCode::NOT_FOUND, Some("NotFound")), "{uri}");
    }
    let job_id = submit(&app, "homeschooling statistics").await;
    let story_id = wait_terminal(&app, &job_id, LIMIT).await.last().unwrap().story_id.clone().unwrap();
    std::fs::remove_file(data.path().join("stories").join(format!("{story_id}.json"))).unwrap();
    let (status, _) = call_json(&app, "GET", &format!("/api/stories/{story_id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn stored_story_is_served_byte_for_byte_and_left_untouched() {
    let data = tempfile::tempdir().unwrap();
    let (app, state) = app(data.path(), Arc::new(mock_runner(&fixture("web"))), 2, None);
    let golden = std::fs::read(golden_story_path()).unwrap();
    let doc = from_json(std::str::from_utf8(&golden).unwrap()).unwrap();
    let path = state.store.story_path(&doc.story_id);
    std::fs::write(&path, &golden).unwrap();
    let modified = std::fs::metadata(&path).unwrap().modified().unwrap();
    for _ in 0..2 {
        let (status, bytes) = call(&app, "GET", &format!("/api/stories/{}", doc.story_id), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(bytes, golden);
    }
    assert_eq!(std::fs::read(&path).unwrap(), golden);
    assert_eq!(std::fs::metadata(&path).unwrap().modified().unwrap(), modified);
}

#[tokio::test(flavor = "multi_thread")]
async fn health_and_static_files() {
    let data = tempfile::tempdir().unwrap();
    let site = tempfile::tempdir().unwrap();
    std::fs::write(site.path().join("index.html"), "<!doctype html><title>story</title>").unwrap();
    std::fs::create_dir(site.path().join("assets")).unwrap();
    std::fs::write(site.path().join("assets/app.js"), "console.log(1)").unwrap();
    let (app, _) = app(data.path(), Arc::new(mock_runner(&fixture("web"))), 2, Some(site.path()));
    assert_eq!(call(&app, "GET", "/healthz", None).await, (StatusCode::OK, b"ok".to_vec()));
    let (status, body) = call(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("<title>story</title>"));
    assert_eq!(call(&app, "GET", "/assets/app.js", None).await.1, b"console.log(1)".to_vec());
    assert_eq!(call(&app, "GET", "/missing.css", None).await.0, StatusCode::NOT_FOUND);
    let (status, _) = call_json(&app, "GET", "/api/jobs/j1", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn restart_fails_interrupted_jobs() {
    let data = tempfile::tempdir().unwrap();
    let gate = Arc::new(GatedRunner::default());
    {
        let (app, _) = app(data.path(), gate.clone(), 2, None);
        submit(&app, "left running").await;
    }
    let store = factstory_service::store::FileStore::open(data.path()).unwrap();
    let jobs = store.load_jobs().unwrap();
    assert_eq!(jobs.len(), 1);
    let table = factstory_service::jobs::JobTable::restore(2, jobs, chrono::Utc::now());
    let job = table.get("j1").unwrap();
    assert_eq!(job.state, JobState::Failed);
    assert!(job.error_detail.unwrap().starts_with("Interrupted"));
    gate.release();
}
