//! From article paragraphs to validated facts with structured data points.

pub mod datapoints;
pub mod filter;
pub mod identify;
pub mod quantity;
pub mod validate;

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{Article, Fact, IdSeq};
use crate::providers::{ProviderError, Providers};
pub use filter::FilteredParagraph;
pub use validate::{IssueKind, ValidationIssue};

/// Articles processed concurrently.
pub const ARTICLE_WORKERS: usize = 4;

#[derive(Debug, Clone, Default, Serialize)]
pub struct ArticleExtraction {
    pub article_id: String,
    pub paragraphs: Vec<FilteredParagraph>,
    pub identified: usize,
    pub dropped_unparsable: usize,
    pub dropped_unresolved: usize,
    pub dropped_untraceable: usize,
    pub rounds: usize,
    pub issues: Vec<Vec<ValidationIssue>>,
    pub facts: Vec<Fact>,
}

/// Full extraction for one article. Fact ids are provisional
/// (`<article>.<n>`) until [`extract_all`] renumbers them.
pub fn extract_article(providers: &Providers, article: &Article, query: &str) -> Result<ArticleExtraction, ProviderError> {
    let paragraphs = filter::filter_paragraphs(providers, article, query)?;
    let per_paragraph: Vec<Vec<Fact>> = paragraphs
        .par_iter()
        .filter(|p| p.retained())
        .map(|p| identify::identify_facts(providers, &article.title, p))
        .collect::<Result<_, _>>()?;
    let mut facts: Vec<Fact> = per_paragraph.into_iter().flatten().collect();
    for (i, f) in facts.iter_mut().enumerate() {
        f.id = format!("{}.{}", article.id, i + 1);
    }
    let identified = facts.len();
    let with_points: Vec<Fact> = facts
        .par_iter()
        .map(|f| datapoints::extract_data_points(providers, f, article))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let dropped_unparsable = identified - with_points.len();
    let outcome = validate::validate_and_refine(
        providers,
        with_points,
        &article.paragraphs,
        article.published_year,
        validate::MAX_ITERATIONS,
    )?;
    Ok(ArticleExtraction {
        article_id: article.id.clone(),
        paragraphs,
        identified,
        dropped_unparsable,
        dropped_unresolved: outcome.dropped_unresolved,
        dropped_untraceable: outcome.dropped_untraceable,
        rounds: outcome.rounds,
        issues: outcome.issues,
        facts: outcome.facts,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExtractionOutcome {
    pub facts: Vec<Fact>,
    pub articles: Vec<ArticleExtraction>,
}

impl ExtractionOutcome {
    pub fn dropped_unresolved(&self) -> usize {
        self.articles.iter().map(|a| a.dropped_unresolved).sum()
    }
}

/// Extracts every article on a bounded pool and assigns final fact ids in
/// (article, paragraph, position) order. `progress` receives
/// `(articles done, total)`.
pub fn extract_all(
    providers: &Providers,
    articles: &[Article],
    query: &str,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<ExtractionOutcome, ProviderError> {
    let done = AtomicUsize::new(0);
    let run = || {
        articles
            .par_iter()
            .map(|a| {
                let r = extract_article(providers, a, query);
                progress(done.fetch_add(1, Ordering::SeqCst) + 1, articles.len());
                r
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let mut per_article = match rayon::ThreadPoolBuilder::new().num_threads(ARTICLE_WORKERS).build() {
        Ok(pool) => pool.install(run)?,
        Err(_) => run()?,
    };
    let mut ids = IdSeq::new("f");
    let mut facts = Vec::new();
    for a in per_article.iter_mut() {
        for f in a.facts.iter_mut() {
            f.id = ids.next_id();
            facts.push(f.clone());
        }
    }
    Ok(ExtractionOutcome { facts, articles: per_article })
}
