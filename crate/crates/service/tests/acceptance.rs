//! Acceptance criteria. Every criterion is evaluated, timed against its
//! budget and reported as one PASS/FAIL line; the process exits non-zero
//! if any fails. Runs without the libtest harness so the lines are always
//! printed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use factstory_core::clock::FakeClock;
use factstory_core::extraction::quantity::normalize_quantity;
use factstory_core::model::to_f64;
use factstory_core::organization::gmm::{assign_clusters, fit_gmm, K_MAX};
use factstory_core::pipeline::{run_pipeline, PipelineConfig};
use factstory_core::providers::{ProviderConfig, Providers};
use factstory_core::wire::{from_json, schema_errors};
use factstory_service::jobs::JobState;
use factstory_testkit::corpus::write_random_corpus;
use factstory_testkit::invariants::all_problems;
use factstory_testkit::oracle::{adjusted_rand_index, blobs, random_numeric_token, ring_centers};
use factstory_testkit::{fixture, golden_story_path, quantity_cases, worked, workspace_root};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn quantity_normalizer() -> Outcome {
    let cases = quantity_cases();
    ensure(cases.len() == 60, || format!("table has {} cases", cases.len()))?;
    let misses: Vec<String> = cases
        .iter()
        .filter(|c| !matches!(normalize_quantity(&c.token), Ok(q) if q.value.to_string() == c.value && q.unit == c.unit))
        .map(|c| c.token.clone())
        .collect();
    ensure(misses.is_empty(), || format!("table mismatches: {misses:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let (token, expected) = random_numeric_token(&mut rng);
        let q = normalize_quantity(&token).map_err(|e| e.to_string())?;
        let got = to_f64(q.magnitude());
        ensure((got - expected).abs() <= 1e-9 * expected.abs().max(1.0), || format!("{token}: {got} vs {expected}"))?;
    }
    Ok("60/60 table cases exact, 10000 generated tokens round-trip".into())
}

fn gmm_selection() -> Outcome {
    let truth_centers = [vec![-1.0, 0.0], vec![1.0, 0.0]];
    let mut picked_two = 0;
    let mut worst_ari = f64::INFINITY;
    for seed in 0..20u64 {
        let (data, truth) = blobs(&truth_centers, 40, 0.05, 1000 + seed);
        let fit = fit_gmm(&data, K_MAX, seed).map_err(|e| e.to_string())?;
        if fit.model.k == 2 {
            picked_two += 1;
        }
        let labels = assign_clusters(&fit.model, &data).labels;
        worst_ari = worst_ari.min(adjusted_rand_index(&labels, &truth));
        for w in fit.model.history.windows(2) {
            ensure(w[1] >= w[0] - 1e-8, || format!("seed {seed}: log-likelihood fell {} -> {}", w[0], w[1]))?;
        }
    }
    ensure(picked_two >= 19, || format!("k=2 chosen for {picked_two}/20 seeds"))?;
    ensure(worst_ari >= 0.95, || format!("lowest ARI {worst_ari:.4}"))?;
    let (data, _) = blobs(&ring_centers(12, 2, 5.0), 17, 0.05, 77);
    let k = fit_gmm(&data[..200], K_MAX, 42).map_err(|e| e.to_string())?.model.k;
    ensure(k <= K_MAX, || format!("k={k} on 12 components"))?;
    Ok(format!("k=2 in {picked_two}/20 seeds, min ARI {worst_ari:.4}, k={k} on 12 components"))
}

fn worked_examples() -> Outcome {
    worked::label_value_unit().map_err(|e| format!("label/value/unit: {e}"))?;
    worked::value_correction().map_err(|e| format!("3 -> 3.7 correction: {e}"))?;
    worked::merge_triple().map_err(|e| format!("merge triple: {e}"))?;
    worked::us_fill().map_err(|e| format!("U.S. fill: {e}"))?;
    Ok("label/value/unit, value correction, merge triple, U.S. fill".into())
}

fn deterministic_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("story.json");
    let status = Command::new(env!("CARGO_BIN_EXE_factstory"))
        .current_dir(workspace_root())
        .env("RUST_LOG", "warn")
        .args(["generate", "--mode", "mock", "--corpus", "fixtures/homeschooling", "--seed", "42", "--out"])
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("generate exited with {status}"))?;
    let produced = std::fs::read(&out).map_err(|e| e.to_string())?;
    let golden = std::fs::read(golden_story_path()).map_err(|e| e.to_string())?;
    ensure(produced == golden, || "output differs from the golden story".into())?;
    let v = Command::new(env!("CARGO_BIN_EXE_factstory")).arg("validate").arg(&out).output().map_err(|e| e.to_string())?;
    ensure(v.status.code() == Some(0), || format!("validate: {}", String::from_utf8_lossy(&v.stdout)))?;
    Ok(format!("{} bytes identical to golden, 0 violations", produced.len()))
}

fn partition_traceability() -> Outcome {
    let golden = from_json(&std::fs::read_to_string(golden_story_path()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let problems = all_problems(&golden);
    ensure(problems.is_empty(), || format!("golden: {}", problems.join("; ")))?;
    let mut facts = golden.stats.total_facts;
    for seed in 0..20u64 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let query = write_random_corpus(dir.path(), 500 + seed);
        let providers = Providers::from_config(&ProviderConfig::mock(dir.path())).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig { query: Some(query), corpus: Some(dir.path().into()), seed, ..Default::default() };
        let doc = run_pipeline(&providers, &FakeClock::mock_epoch(), &cfg, &|_, _| {}).map_err(|e| format!("corpus {seed}: {e}"))?;
        let problems = all_problems(&doc);
        ensure(problems.is_empty(), || format!("corpus {seed}: {}", problems.join("; ")))?;
        facts += doc.stats.total_facts;
    }
    Ok(format!("golden + 20 random corpora, {facts} facts checked"))
}

fn service_lifecycle() -> Outcome {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let limit = Duration::from_secs(60);
        let data = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (app, _) = app(data.path(), Arc::new(mock_runner(&fixture("web"))), 2, None);
        let job = submit(&app, "homeschooling statistics").await;
        let seen = wait_terminal(&app, &job, limit).await;
        let problems = monotonicity_problems(&seen);
        ensure(problems.is_empty(), || problems.join("; "))?;
        let last = seen.last().unwrap();
        ensure(last.state == JobState::Ready, || format!("ended {:?}: {:?}", last.state, last.error_detail))?;
        let story_id = last.story_id.clone().ok_or("ready job has no story id")?;
        let (status, bytes) = call(&app, "GET", &format!("/api/stories/{story_id}"), None).await;
        ensure(status.is_success(), || format!("GET story: {status}"))?;
        let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
        let errors = schema_errors(&value);
        ensure(errors.is_empty(), || errors.join("; "))?;

        let (failing, _) = app_with_offline_fixtures(data.path());
        let job = submit(&failing, "homeschooling statistics").await;
        let last = wait_terminal(&failing, &job, limit).await.pop().unwrap();
        ensure(last.state == JobState::Failed, || format!("failure corpus ended {:?}", last.state))?;
        let detail = last.error_detail.unwrap_or_default();
        ensure(!detail.is_empty(), || "failed job has no error_detail".into())?;
        Ok(format!("ready with {} monotone snapshots, schema-valid story, failure: {detail}", seen.len()))
    })
}

fn app_with_offline_fixtures(data: &std::path::Path) -> (axum::Router, factstory_service::api::AppState) {
    app(&data.join("offline"), Arc::new(mock_runner(&fixture("web-offline"))), 2, None)
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 6] = [
        ("quantity normalizer", Duration::from_secs(1), quantity_normalizer),
        ("gmm/em model selection", Duration::from_secs(5), gmm_selection),
        ("worked examples", Duration::from_secs(30), worked_examples),
        ("deterministic end-to-end", Duration::from_secs(30), deterministic_end_to_end),
        ("partition/traceability", Duration::from_secs(120), partition_traceability),
        ("service lifecycle", Duration::from_secs(60), service_lifecycle),
    ];
    let mut failed = Vec::new();
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|m| {
            if elapsed <= budget {
                Ok(m)
            } else {
                Err(format!("{m}; took {elapsed:.2?}, budget {budget:?}"))
            }
        });
        match &outcome {
            Ok(m) => println!("PASS {name} ({elapsed:.2?}): {m}"),
            Err(m) => {
                println!("FAIL {name} ({elapsed:.2?}): {m}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
