//! Clients for web search, page fetching, structured LLM completion and text
//! embeddings. Every client has a live implementation and a deterministic mock
//! that never touches the network.

pub mod config;
pub mod embed;
pub mod fetch;
pub mod heuristics;
pub mod html;
pub mod llm;
pub mod mock;
pub mod ratelimit;
pub mod schemas;
pub mod search;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use config::{ProviderConfig, ProviderMode};
pub use llm::{prompt_key, StructuredRequest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("fetch failed for {url}: {reason}")]
    FetchFailed { url: String, reason: String },
    #[error("non-HTML content at {0}")]
    NonHtmlContent(String),
    #[error("task {task}: output still violates schema after {attempts} attempts: {last_error}")]
    SchemaViolationAfterRetries { task: String, attempts: u32, last_error: String },
    #[error("unknown output schema {0:?}")]
    UnknownSchema(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// One organic search result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerpEntry {
    pub url: String,
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub source_domain: String,
    #[serde(default)]
    pub published_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMetadata {
    pub title: String,
    pub published_year: Option<i32>,
    pub source_domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedPage {
    pub paragraphs: Vec<String>,
    pub metadata: PageMetadata,
}

pub trait SearchProvider: Send + Sync {
    fn search(&self, query: &str, max_results: usize) -> Result<Vec<SerpEntry>, ProviderError>;
}

pub trait PageFetcher: Send + Sync {
    fn fetch_page(&self, url: &str) -> Result<FetchedPage, ProviderError>;
}

/// Raw completion: returns whatever document the model produced. Schema
/// enforcement and retries live in [`llm::complete_structured`].
pub trait LlmProvider: Send + Sync {
    fn complete(&self, req: &StructuredRequest, feedback: &[String]) -> Result<Value, ProviderError>;
}

pub trait Embedder: Send + Sync {
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

/// The full set of clients one pipeline run talks to.
#[derive(Clone)]
pub struct Providers {
    pub mode: ProviderMode,
    pub search: Arc<dyn SearchProvider>,
    pub fetcher: Arc<dyn PageFetcher>,
    pub llm: Arc<dyn LlmProvider>,
    pub embedder: Arc<dyn Embedder>,
}

impl Providers {
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        cfg.check()?;
        match cfg.mode {
            ProviderMode::Mock => {
                let fixtures = mock::FixtureStore::open(&cfg.fixture_dir)?;
                Ok(Self {
                    mode: ProviderMode::Mock,
                    search: Arc::new(mock::MockSearch::new(fixtures.clone())),
                    fetcher: Arc::new(mock::MockFetcher::new(fixtures.clone())),
                    llm: Arc::new(mock::MockLlm::new(Some(fixtures))),
                    embedder: Arc::new(mock::HashingEmbedder),
                })
            }
            ProviderMode::Live => Ok(Self {
                mode: ProviderMode::Live,
                search: Arc::new(search::SearchApiClient::new(cfg)?),
                fetcher: Arc::new(fetch::HttpFetcher::new(cfg)?),
                llm: Arc::new(llm::OpenAiCompatible::new(cfg)?),
                embedder: Arc::new(embed::OpenAiEmbedder::new(cfg)?),
            }),
        }
    }

    /// Mock providers with no fixture directory: every LLM call is answered by
    /// the rule-based responder.
    pub fn offline() -> Self {
        let fixtures = mock::FixtureStore::empty();
        Self {
            mode: ProviderMode::Mock,
            search: Arc::new(mock::MockSearch::new(fixtures.clone())),
            fetcher: Arc::new(mock::MockFetcher::new(fixtures.clone())),
            llm: Arc::new(mock::MockLlm::new(Some(fixtures))),
            embedder: Arc::new(mock::HashingEmbedder),
        }
    }

    pub fn complete_structured(&self, req: &StructuredRequest) -> Result<Value, ProviderError> {
        llm::complete_structured(self.llm.as_ref(), req, |_| Ok(()))
    }

    pub fn complete_checked<F>(&self, req: &StructuredRequest, check: F) -> Result<Value, ProviderError>
    where
        F: Fn(&Value) -> Result<(), String>,
    {
        llm::complete_structured(self.llm.as_ref(), req, check)
    }
}
