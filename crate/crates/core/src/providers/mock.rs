//! Offline providers backed by fixture files.
//!
//! Layout under the fixture directory:
//!
//! ```text
//! serp/*.json              {"query": "...", "results": [SerpEntry...]}
//! pages/manifest.json      {"<url>": {"file": "x.html", "status": 200, "content_type": "text/html"}}
//! pages/*.html
//! llm/<task>/<key>.json    response document, returned verbatim
//! ```
//!
//! LLM requests with no fixture are answered by the rule-based responder in
//! [`super::heuristics`], so complete pipelines run on any corpus offline.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fnv::FnvHasher;
use serde::Deserialize;
use serde_json::Value;

use super::embed::l2_normalize;
use super::fetch::is_html;
use super::html::{host_of, parse_page};
use super::search::{check_search_args, dedup_and_truncate};
use super::{heuristics, Embedder, FetchedPage, LlmProvider, PageFetcher, ProviderError, SearchProvider, SerpEntry};
use super::StructuredRequest;

#[derive(Debug, Clone, Deserialize)]
struct SerpFixture {
    query: String,
    results: Vec<SerpEntry>,
}

#[derive(Debug, Clone, Deserialize)]
struct PageEntry {
    #[serde(default)]
    file: Option<String>,
    #[serde(default = "ok_status")]
    status: u16,
    #[serde(default = "html_type")]
    content_type: String,
}

fn ok_status() -> u16 {
    200
}

fn html_type() -> String {
    "text/html".to_string()
}

fn normalize_query(q: &str) -> String {
    q.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Default)]
struct FixtureData {
    root: Option<PathBuf>,
    serp: Vec<SerpFixture>,
    pages: HashMap<String, PageEntry>,
}

/// Read-only view of a fixture directory, shared by the mock providers.
#[derive(Debug, Clone, Default)]
pub struct FixtureStore {
    data: Arc<FixtureData>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ProviderError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProviderError::ProviderUnavailable(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ProviderError::ProviderUnavailable(format!("{}: {e}", path.display())))
}

impl FixtureStore {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn open(dir: &Path) -> Result<Self, ProviderError> {
        let mut data = FixtureData { root: Some(dir.to_path_buf()), ..Default::default() };
        let serp_dir = dir.join("serp");
        if serp_dir.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&serp_dir)
                .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            for f in files {
                data.serp.push(read_json(&f)?);
            }
        }
        let manifest = dir.join("pages").join("manifest.json");
        if manifest.is_file() {
            data.pages = read_json(&manifest)?;
        }
        Ok(Self { data: Arc::new(data) })
    }

    pub fn root(&self) -> Option<&Path> {
        self.data.root.as_deref()
    }

    fn serp_for(&self, query: &str) -> Option<&SerpFixture> {
        let q = normalize_query(query);
        self.data.serp.iter().find(|f| normalize_query(&f.query) == q)
    }

    pub fn llm_fixture(&self, task: &str, key: &str) -> Option<Value> {
        let path = self.root()?.join("llm").join(task).join(format!("{key}.json"));
        let raw = std::fs::read_to_string(path).ok()?;
        // A broken fixture is passed through as a string so schema
        // validation rejects it like any malformed model output.
        Some(serde_json::from_str(&raw).unwrap_or(Value::String(raw)))
    }
}

pub struct MockSearch {
    fixtures: FixtureStore,
}

impl MockSearch {
    pub fn new(fixtures: FixtureStore) -> Self {
        Self { fixtures }
    }
}

impl SearchProvider for MockSearch {
    fn search(&self, query: &str, max_results: usize) -> Result<Vec<SerpEntry>, ProviderError> {
        check_search_args(query, max_results)?;
        let Some(fixture) = self.fixtures.serp_for(query) else {
            tracing::warn!(query, "no SERP fixture for query");
            return Ok(Vec::new());
        };
        let entries = fixture
            .results
            .iter()
            .cloned()
            .map(|mut e| {
                if e.source_domain.is_empty() {
                    e.source_domain = host_of(&e.url);
                }
                e
            })
            .collect();
        Ok(dedup_and_truncate(entries, max_results))
    }
}

pub struct MockFetcher {
    fixtures: FixtureStore,
}

impl MockFetcher {
    pub fn new(fixtures: FixtureStore) -> Self {
        Self { fixtures }
    }
}

impl PageFetcher for MockFetcher {
    fn fetch_page(&self, url: &str) -> Result<FetchedPage, ProviderError> {
        let failed = |reason: &str| ProviderError::FetchFailed { url: url.to_string(), reason: reason.to_string() };
        let entry = self.fixtures.data.pages.get(url).ok_or_else(|| failed("not in fixture manifest"))?;
        if !(200..300).contains(&entry.status) {
            return Err(failed(&format!("HTTP {}", entry.status)));
        }
        if !is_html(&entry.content_type) {
            return Err(ProviderError::NonHtmlContent(url.to_string()));
        }
        let file = entry.file.as_deref().ok_or_else(|| failed("manifest entry without file"))?;
        let root = self.fixtures.root().ok_or_else(|| failed("no fixture directory"))?;
        let html = std::fs::read_to_string(root.join("pages").join(file)).map_err(|e| failed(&e.to_string()))?;
        Ok(parse_page(&html, url))
    }
}

/// Replays fixture responses keyed by `(task, prompt key)` and falls back to
/// the rule-based responder.
pub struct MockLlm {
    fixtures: Option<FixtureStore>,
}

impl MockLlm {
    pub fn new(fixtures: Option<FixtureStore>) -> Self {
        Self { fixtures }
    }

    pub fn rules_only() -> Self {
        Self { fixtures: None }
    }
}

impl LlmProvider for MockLlm {
    fn complete(&self, req: &StructuredRequest, _feedback: &[String]) -> Result<Value, ProviderError> {
        if let Some(doc) = self.fixtures.as_ref().and_then(|f| f.llm_fixture(&req.task_name, &req.key())) {
            return Ok(doc);
        }
        heuristics::respond(req)
    }
}

pub const MOCK_EMBEDDING_DIM: usize = 64;

fn fnv64(s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(s.as_bytes());
    h.finish()
}

/// Token-set hashing embedder: every distinct lowercase token adds ±1 to
/// one of 64 dimensions, then the sum is L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashingEmbedder;

impl HashingEmbedder {
    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let tokens: BTreeSet<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut v = vec![0.0; MOCK_EMBEDDING_DIM];
        for t in &tokens {
            let h = fnv64(t);
            let sign = if (h >> 32) & 1 == 1 { -1.0 } else { 1.0 };
            v[(h % MOCK_EMBEDDING_DIM as u64) as usize] += sign;
        }
        if !l2_normalize(&mut v) {
            // No tokens, or every token cancelled out.
            v = vec![0.0; MOCK_EMBEDDING_DIM];
            v[(fnv64(text) % MOCK_EMBEDDING_DIM as u64) as usize] = 1.0;
        }
        v
    }
}

impl Embedder for HashingEmbedder {
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::InvalidRequest("no texts to embed".into()));
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
