use factstory_core::clock::FakeClock;
use factstory_core::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use factstory_core::providers::{ProviderConfig, Providers};
use factstory_core::retrieval::{expand_query, ingest_corpus, normalize_url, retrieve_articles, RetrievalError};
use factstory_testkit::fixture;

fn web(name: &str) -> Providers {
    Providers::from_config(&ProviderConfig::mock(fixture(name))).unwrap()
}

#[test]
fn mock_search_returns_recorded_results() {
    let results = web("web").search.search("homeschooling statistics", 10).unwrap();
    assert_eq!(results.len(), 5);
    assert_eq!(results[0].source_domain, "education-trends.example.org");
    assert!(web("web").search.search("unrecorded query", 10).unwrap().is_empty());
}

#[test]
fn expansion_keeps_the_original_first() {
    let q = expand_query(&web("web"), "homeschooling statistics", 2).unwrap();
    assert_eq!(q.len(), 3);
    assert_eq!(q[0], "homeschooling statistics");
    let unique: std::collections::BTreeSet<String> = q.iter().map(|s| s.to_lowercase()).collect();
    assert_eq!(unique.len(), 3);
}

#[test]
fn retrieval_dedups_and_skips_failures() {
    let providers = web("web");
    let queries = expand_query(&providers, "homeschooling statistics", 2).unwrap();
    let (articles, report) = retrieve_articles(&providers, &queries, 10, 15, &FakeClock::mock_epoch()).unwrap();
    assert_eq!(articles.len(), 4);
    let urls: std::collections::BTreeSet<String> = articles.iter().map(|a| normalize_url(&a.url)).collect();
    assert_eq!(urls.len(), 4);
    assert!(report.failed_fetches >= 1);
    assert!(articles.iter().all(|a| !a.paragraphs.is_empty()));
    let growth = articles.iter().find(|a| a.url.contains("homeschool-growth")).unwrap();
    assert_eq!(growth.found_by.len(), 2);
}

#[test]
fn retrieval_caps_article_count() {
    let providers = web("web");
    let (articles, _) = retrieve_articles(&providers, &["homeschooling statistics".into()], 10, 2, &FakeClock::mock_epoch()).unwrap();
    assert_eq!(articles.len(), 2);
}

#[test]
fn every_fetch_failing_is_an_error() {
    let providers = web("web-offline");
    let err = retrieve_articles(&providers, &["homeschooling statistics".into()], 10, 15, &FakeClock::mock_epoch()).unwrap_err();
    assert!(matches!(err, RetrievalError::AllFetchesFailed { .. }), "{err}");
    let cfg = PipelineConfig { query: Some("homeschooling statistics".into()), ..Default::default() };
    let err = run_pipeline(&providers, &FakeClock::mock_epoch(), &cfg, &|_, _| {}).unwrap_err();
    assert!(matches!(err, PipelineError::Retrieval(RetrievalError::AllFetchesFailed { .. })));
    assert!(err.to_string().starts_with("AllFetchesFailed"));
}

#[test]
fn corpus_ingest_reads_sidecars_in_name_order() {
    let articles = ingest_corpus(&fixture("homeschooling"), &FakeClock::mock_epoch()).unwrap();
    let ids: Vec<&str> = articles.iter().map(|a| a.id.as_str()).collect();
    assert_eq!(ids, ["a1", "a2", "a3", "a4"]);
    assert_eq!(articles[0].published_year, 2024);
    assert!(articles.iter().all(|a| a.paragraphs.len() >= 2));
}

#[test]
fn corpus_edge_cases() {
    let clock = FakeClock::mock_epoch();
    let dir = tempfile::tempdir().unwrap();
    assert!(ingest_corpus(dir.path(), &clock).unwrap().is_empty());
    std::fs::write(dir.path().join("x.txt"), "One paragraph with 5 numbers.").unwrap();
    std::fs::write(dir.path().join("x.meta.json"), r#"{"url": "https://e.org/x", "year": 2020}"#).unwrap();
    let err = ingest_corpus(dir.path(), &clock).unwrap_err();
    assert!(matches!(err, RetrievalError::MalformedCorpusEntry { .. }), "{err}");
}

#[test]
fn web_pipeline_runs_end_to_end() {
    let cfg = PipelineConfig { query: Some("homeschooling statistics".into()), ..Default::default() };
    let doc = run_pipeline(&web("web"), &FakeClock::mock_epoch(), &cfg, &|_, _| {}).unwrap();
    assert_eq!(doc.articles.len(), 4);
    assert_eq!(doc.expanded_queries[0], "homeschooling statistics");
    assert!(doc.stats.total_facts > 0);
    assert!(factstory_testkit::invariants::all_problems(&doc).is_empty());
}
