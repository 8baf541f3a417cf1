//! End-to-end run: retrieval, extraction, organization, composition.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::clock::Clock;
use crate::extraction::extract_all;
use crate::model::StoryDocument;
use crate::organization::gmm::K_MAX;
use crate::organization::{organize, OrganizationError, OrganizeOptions, MAX_FACTS};
use crate::providers::{ProviderError, Providers};
use crate::retrieval::{self, RetrievalError, DEFAULT_MAX_ARTICLES, DEFAULT_PER_QUERY, DEFAULT_VARIANTS};
use crate::storygen::{assemble_story, compose_units, StoryError, StoryParts};
use crate::wire::story_id_for;

pub const MAX_QUERY_CHARS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Retrieving,
    Extracting,
    Organizing,
    Composing,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Retrieving, Stage::Extracting, Stage::Organizing, Stage::Composing];

    pub fn weight(self) -> f64 {
        match self {
            Stage::Retrieving => 0.2,
            Stage::Extracting => 0.4,
            Stage::Organizing => 0.25,
            Stage::Composing => 0.15,
        }
    }

    /// Overall progress at `fraction` of the way through this stage.
    pub fn progress(self, fraction: f64) -> f64 {
        let before: f64 = Stage::ALL.iter().take_while(|s| **s != self).map(|s| s.weight()).sum();
        (before + self.weight() * fraction.clamp(0.0, 1.0)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no quantitative facts could be extracted from {articles} article(s)")]
    NoFacts { articles: usize },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Organization(#[from] OrganizationError),
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error("debug dump {path}: {reason}")]
    Debug { path: PathBuf, reason: String },
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Required unless the corpus directory has a `query.txt`.
    pub query: Option<String>,
    /// Read articles from this directory instead of searching.
    pub corpus: Option<PathBuf>,
    pub seed: u64,
    pub max_articles: usize,
    pub n_variants: usize,
    pub per_query: usize,
    pub max_facts: usize,
    pub debug_dir: Option<PathBuf>,
    /// Overrides the derived story id.
    pub story_id: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            query: None,
            corpus: None,
            seed: 42,
            max_articles: DEFAULT_MAX_ARTICLES,
            n_variants: DEFAULT_VARIANTS,
            per_query: DEFAULT_PER_QUERY,
            max_facts: MAX_FACTS,
            debug_dir: None,
            story_id: None,
        }
    }
}

pub fn check_query(query: &str) -> Result<String, PipelineError> {
    let q = query.trim();
    if q.is_empty() {
        return Err(PipelineError::InvalidQuery("query is empty".into()));
    }
    if q.chars().count() > MAX_QUERY_CHARS {
        return Err(PipelineError::InvalidQuery(format!("query is longer than {MAX_QUERY_CHARS} characters")));
    }
    Ok(q.to_string())
}

fn resolve_query(cfg: &PipelineConfig) -> Result<String, PipelineError> {
    if let Some(q) = &cfg.query {
        return check_query(q);
    }
    let from_corpus = cfg.corpus.as_ref().and_then(|d| std::fs::read_to_string(d.join(retrieval::CORPUS_QUERY_FILE)).ok());
    match from_corpus {
        Some(q) => check_query(&q),
        None => Err(PipelineError::InvalidQuery("no query given and the corpus has no query.txt".into())),
    }
}

fn dump<T: Serialize>(dir: Option<&Path>, name: &str, value: &T) -> Result<(), PipelineError> {
    let Some(dir) = dir else { return Ok(()) };
    let path = dir.join(name);
    let err = |e: String| PipelineError::Debug { path: path.clone(), reason: e };
    std::fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
    let text = serde_json::to_string_pretty(value).map_err(|e| err(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| err(e.to_string()))
}

/// Runs every stage. `progress` is called with the current stage and the
/// overall completed fraction.
pub fn run_pipeline(
    providers: &Providers,
    clock: &dyn Clock,
    cfg: &PipelineConfig,
    progress: &(dyn Fn(Stage, f64) + Sync),
) -> Result<StoryDocument, PipelineError> {
    let query = resolve_query(cfg)?;
    let debug = cfg.debug_dir.as_deref();

    progress(Stage::Retrieving, Stage::Retrieving.progress(0.0));
    let (expanded, mut articles) = match &cfg.corpus {
        Some(dir) => (vec![query.clone()], retrieval::ingest_corpus(dir, clock)?),
        None => {
            let queries = retrieval::expand_query(providers, &query, cfg.n_variants)?;
            progress(Stage::Retrieving, Stage::Retrieving.progress(0.3));
            let (articles, report) =
                retrieval::retrieve_articles(providers, &queries, cfg.per_query, cfg.max_articles, clock)?;
            tracing::info!(?report, "retrieval done");
            (queries, articles)
        }
    };
    articles.truncate(cfg.max_articles.max(1));
    dump(debug, "01_articles.json", &articles)?;
    tracing::info!(articles = articles.len(), "articles ready");

    progress(Stage::Extracting, Stage::Extracting.progress(0.0));
    let extraction = extract_all(providers, &articles, &query, &|done, total| {
        progress(Stage::Extracting, Stage::Extracting.progress(done as f64 / total.max(1) as f64));
    })?;
    dump(debug, "02_extraction.json", &extraction)?;
    if extraction.facts.is_empty() {
        return Err(PipelineError::NoFacts { articles: articles.len() });
    }
    tracing::info!(facts = extraction.facts.len(), "extraction done");

    progress(Stage::Organizing, Stage::Organizing.progress(0.0));
    let opts = OrganizeOptions { seed: cfg.seed, k_max: K_MAX, max_facts: cfg.max_facts };
    let org = organize(providers, &query, extraction.facts, &articles, &opts)?;
    dump(debug, "03_organization.json", &org)?;
    tracing::info!(clusters = org.clusters.len(), merged = org.merged.len(), "organization done");

    progress(Stage::Composing, Stage::Composing.progress(0.0));
    let units = compose_units(providers, &org.merged, &org.clusters)?;
    let drafts: Vec<_> = units.iter().map(|d| &d.unit).collect();
    dump(debug, "04_units.json", &drafts)?;

    let urls: Vec<&str> = articles.iter().map(|a| a.url.as_str()).collect();
    let story_id = cfg.story_id.clone().unwrap_or_else(|| story_id_for(&query, cfg.seed, &urls));
    let doc = assemble_story(
        providers,
        StoryParts {
            story_id,
            query,
            expanded_queries: expanded,
            articles,
            clusters: org.clusters,
            units,
            created_at: clock.now_utc(),
        },
    )?;
    progress(Stage::Composing, 1.0);
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_weights() {
        let total: f64 = Stage::ALL.iter().map(|s| s.weight()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((Stage::Extracting.progress(0.5) - 0.4).abs() < 1e-12);
        assert!((Stage::Composing.progress(1.0) - 1.0).abs() < 1e-12);
        let marks: Vec<f64> = Stage::ALL.iter().map(|s| s.progress(0.0)).collect();
        assert!(marks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn query_checks() {
        assert!(check_query("  ").is_err());
        assert!(check_query(&"x".repeat(501)).is_err());
        assert_eq!(check_query(" homeschooling ").unwrap(), "homeschooling");
    }
}
