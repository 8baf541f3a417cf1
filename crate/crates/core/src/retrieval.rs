//! Query expansion, search, page fetching and offline corpus ingestion.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::clock::Clock;
use crate::model::{favicon_for, Article, IdSeq, UNKNOWN_YEAR};
use crate::providers::html::host_of;
use crate::providers::{FetchedPage, ProviderError, Providers, SerpEntry, StructuredRequest};

pub const DEFAULT_VARIANTS: usize = 2;
pub const DEFAULT_PER_QUERY: usize = 10;
pub const DEFAULT_MAX_ARTICLES: usize = 15;
pub const MAX_VARIANTS: usize = 5;
pub const FETCH_WORKERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("AllFetchesFailed: none of {attempted} candidate pages could be fetched")]
    AllFetchesFailed { attempted: usize },
    #[error("MalformedCorpusEntry {file}: {reason}")]
    MalformedCorpusEntry { file: String, reason: String },
}

/// Canonical form used to detect duplicate URLs: no scheme, no "www.", no
/// trailing slash, no utm_* or fbclid parameters, no fragment.
pub fn normalize_url(raw: &str) -> String {
    let Ok(mut url) = url::Url::parse(raw.trim()) else {
        return raw.trim().trim_end_matches('/').to_lowercase();
    };
    let kept: Vec<(String, String)> = url
        .query_pairs()
        .filter(|(k, _)| !k.starts_with("utm_") && k != "fbclid")
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    if kept.is_empty() {
        url.set_query(None);
    } else {
        url.query_pairs_mut().clear().extend_pairs(kept);
    }
    url.set_fragment(None);
    let host = url.host_str().unwrap_or_default().trim_start_matches("www.").to_lowercase();
    let port = url.port().map(|p| format!(":{p}")).unwrap_or_default();
    let path = url.path().trim_end_matches('/');
    let query = url.query().map(|q| format!("?{q}")).unwrap_or_default();
    format!("{host}{port}{path}{query}")
}

const EXPAND_PROMPT: &str = "You help a data journalist research a topic on the web.\n\
Rewrite the user's question into {n} alternative web search queries that are likely to surface \
articles reporting statistics, survey results or other quantitative facts on the same topic. \
Each query must differ from the original question and from the other queries.{avoid}\n\n\
Question: {query}\n\nAnswer with JSON of the form {\"variants\": [\"...\"]}.";

pub fn expansion_request(query: &str, n: usize, avoid: &[String]) -> StructuredRequest {
    let avoid_text = if avoid.is_empty() {
        String::new()
    } else {
        format!(" Do not repeat any of: {}.", avoid.join("; "))
    };
    let prompt = EXPAND_PROMPT
        .replace("{n}", &n.to_string())
        .replace("{avoid}", &avoid_text)
        .replace("{query}", query);
    StructuredRequest::new("expand_query", "query_variants", prompt, json!({"query": query, "n": n, "avoid": avoid}))
}

fn collect_variants(doc: &Value, seen: &mut Vec<String>, out: &mut Vec<String>, n: usize) {
    let variants = doc.get("variants").and_then(Value::as_array).cloned().unwrap_or_default();
    for v in variants.iter().filter_map(Value::as_str) {
        let v = v.split_whitespace().collect::<Vec<_>>().join(" ");
        let key = v.to_lowercase();
        if v.is_empty() || seen.contains(&key) || out.len() >= n {
            continue;
        }
        seen.push(key);
        out.push(v);
    }
}

/// The original query followed by up to `n_variants` distinct variants.
/// Duplicates are dropped and one follow-up request is made when short.
pub fn expand_query(providers: &Providers, query: &str, n_variants: usize) -> Result<Vec<String>, RetrievalError> {
    if query.trim().is_empty() {
        return Err(RetrievalError::InvalidRequest("empty query".into()));
    }
    if n_variants > MAX_VARIANTS {
        return Err(RetrievalError::InvalidRequest(format!("n_variants {n_variants} outside [0, {MAX_VARIANTS}]")));
    }
    let mut out = vec![query.to_string()];
    if n_variants == 0 {
        return Ok(out);
    }
    let mut seen = vec![query.trim().to_lowercase()];
    let mut variants = Vec::new();
    let doc = providers.complete_structured(&expansion_request(query, n_variants, &[]))?;
    collect_variants(&doc, &mut seen, &mut variants, n_variants);
    if variants.len() < n_variants {
        let missing = n_variants - variants.len();
        let mut avoid = vec![query.to_string()];
        avoid.extend(variants.iter().cloned());
        let doc = providers.complete_structured(&expansion_request(query, missing, &avoid))?;
        collect_variants(&doc, &mut seen, &mut variants, n_variants);
    }
    out.extend(variants);
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrievalReport {
    pub candidates: usize,
    pub failed_fetches: usize,
    pub dropped_empty: usize,
}

struct Candidate {
    entry: SerpEntry,
    found_by: Vec<String>,
}

/// Interleaves result lists by rank (first of each query, then second...),
/// merging duplicates by normalized URL.
fn interleave(results: Vec<(String, Vec<SerpEntry>)>) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let depth = results.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
    for rank in 0..depth {
        for (query, entries) in &results {
            let Some(e) = entries.get(rank) else { continue };
            let key = normalize_url(&e.url);
            match index.get(&key) {
                Some(&i) => {
                    if !out[i].found_by.contains(query) {
                        out[i].found_by.push(query.clone());
                    }
                }
                None => {
                    index.insert(key, out.len());
                    out.push(Candidate { entry: e.clone(), found_by: vec![query.clone()] });
                }
            }
        }
    }
    out
}

fn fetch_batch(providers: &Providers, batch: &[Candidate]) -> Vec<Result<FetchedPage, ProviderError>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(FETCH_WORKERS).build();
    let run = || batch.par_iter().map(|c| providers.fetcher.fetch_page(&c.entry.url)).collect();
    match pool {
        Ok(pool) => pool.install(run),
        Err(_) => batch.iter().map(|c| providers.fetcher.fetch_page(&c.entry.url)).collect(),
    }
}

/// Searches every query, then fetches candidates in interleaved rank order
/// until `max_articles` pages with text were collected.
pub fn retrieve_articles(
    providers: &Providers,
    queries: &[String],
    per_query: usize,
    max_articles: usize,
    clock: &dyn Clock,
) -> Result<(Vec<Article>, RetrievalReport), RetrievalError> {
    if queries.is_empty() {
        return Err(RetrievalError::InvalidRequest("no queries".into()));
    }
    let mut results = Vec::new();
    for q in queries {
        results.push((q.clone(), providers.search.search(q, per_query)?));
    }
    let candidates = interleave(results);
    let mut report = RetrievalReport { candidates: candidates.len(), ..Default::default() };
    let mut ids = IdSeq::new("a");
    let mut articles = Vec::new();
    let mut next = 0;
    while articles.len() < max_articles && next < candidates.len() {
        let take = (max_articles - articles.len()).min(candidates.len() - next);
        let batch = &candidates[next..next + take];
        next += take;
        for (c, page) in batch.iter().zip(fetch_batch(providers, batch)) {
            match page {
                Ok(page) if page.paragraphs.is_empty() => {
                    tracing::warn!(url = %c.entry.url, "page has no text, dropped");
                    report.dropped_empty += 1;
                }
                Ok(page) => articles.push(article_from(&mut ids, c, page, clock)),
                Err(e) => {
                    tracing::warn!(url = %c.entry.url, error = %e, "fetch failed, skipped");
                    report.failed_fetches += 1;
                }
            }
        }
    }
    if articles.is_empty() {
        return Err(RetrievalError::AllFetchesFailed { attempted: next });
    }
    Ok((articles, report))
}

fn article_from(ids: &mut IdSeq, c: &Candidate, page: FetchedPage, clock: &dyn Clock) -> Article {
    let domain = if page.metadata.source_domain.is_empty() {
        host_of(&c.entry.url)
    } else {
        page.metadata.source_domain.clone()
    };
    let title = if c.entry.title.trim().is_empty() { page.metadata.title.clone() } else { c.entry.title.clone() };
    Article {
        id: ids.next_id(),
        url: c.entry.url.clone(),
        title,
        snippet: c.entry.snippet.clone(),
        favicon_url: favicon_for(&domain),
        source_domain: domain,
        published_year: page.metadata.published_year.or(c.entry.published_year).unwrap_or(UNKNOWN_YEAR),
        retrieved_at: clock.now_utc(),
        paragraphs: page.paragraphs,
        found_by: c.found_by.clone(),
    }
}

#[derive(Debug, Deserialize)]
struct CorpusMeta {
    title: Option<String>,
    url: Option<String>,
    #[serde(default)]
    year: Option<i32>,
    #[serde(default)]
    domain: Option<String>,
    #[serde(default)]
    snippet: Option<String>,
}

fn split_paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(line.trim());
        }
    }
    if !current.is_empty() {
        out.push(current.join(" "));
    }
    out
}

/// Optional file in a corpus directory holding the query; never an article.
pub const CORPUS_QUERY_FILE: &str = "query.txt";

/// Reads `<name>.txt` + `<name>.meta.json` pairs in filename order.
pub fn ingest_corpus(dir: &Path, clock: &dyn Clock) -> Result<Vec<Article>, RetrievalError> {
    let malformed = |file: &Path, reason: String| RetrievalError::MalformedCorpusEntry {
        file: file.display().to_string(),
        reason,
    };
    let entries = std::fs::read_dir(dir).map_err(|e| malformed(dir, e.to_string()))?;
    let mut texts: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .filter(|p| p.file_name().is_some_and(|n| n != CORPUS_QUERY_FILE))
        .collect();
    texts.sort();
    let mut ids = IdSeq::new("a");
    let mut articles = Vec::new();
    for path in texts {
        let meta_path = path.with_extension("meta.json");
        let meta_raw = std::fs::read_to_string(&meta_path).map_err(|e| malformed(&meta_path, e.to_string()))?;
        let meta: CorpusMeta = serde_json::from_str(&meta_raw).map_err(|e| malformed(&meta_path, e.to_string()))?;
        let title = meta
            .title
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| malformed(&meta_path, "missing title".into()))?;
        let url = meta
            .url
            .filter(|u| url::Url::parse(u).is_ok())
            .ok_or_else(|| malformed(&meta_path, "missing or invalid url".into()))?;
        let text = std::fs::read_to_string(&path).map_err(|e| malformed(&path, e.to_string()))?;
        let paragraphs = split_paragraphs(&text);
        if paragraphs.is_empty() {
            tracing::warn!(file = %path.display(), "corpus entry has no text, dropped");
            continue;
        }
        let domain = meta.domain.filter(|d| !d.is_empty()).unwrap_or_else(|| host_of(&url));
        articles.push(Article {
            id: ids.next_id(),
            snippet: meta.snippet.unwrap_or_else(|| paragraphs[0].chars().take(160).collect()),
            favicon_url: favicon_for(&domain),
            source_domain: domain,
            published_year: meta.year.unwrap_or(UNKNOWN_YEAR),
            retrieved_at: clock.now_utc(),
            url,
            title,
            paragraphs,
            found_by: Vec::new(),
        });
    }
    Ok(articles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_normalization() {
        assert_eq!(normalize_url("https://www.Example.com/a/?utm_source=x&id=3&fbclid=9#top"), "example.com/a?id=3");
        assert_eq!(normalize_url("http://example.com/a"), normalize_url("https://www.example.com/a/"));
        assert_ne!(normalize_url("https://example.com/a?id=1"), normalize_url("https://example.com/a?id=2"));
    }

    #[test]
    fn paragraphs_split_on_blank_lines() {
        assert_eq!(split_paragraphs("a\nb\n\n\nc\n  \nd"), vec!["a b", "c", "d"]);
        assert!(split_paragraphs("\n\n").is_empty());
    }

    fn serp(url: &str) -> SerpEntry {
        SerpEntry { url: url.into(), title: url.into(), snippet: String::new(), source_domain: String::new(), published_year: None }
    }

    #[test]
    fn interleave_is_round_robin_with_dedup() {
        let got = interleave(vec![
            ("q1".into(), vec![serp("https://a.com/1"), serp("https://a.com/2")]),
            ("q2".into(), vec![serp("https://www.a.com/1/"), serp("https://b.com/1")]),
        ]);
        let urls: Vec<_> = got.iter().map(|c| c.entry.url.as_str()).collect();
        assert_eq!(urls, vec!["https://a.com/1", "https://a.com/2", "https://b.com/1"]);
        assert_eq!(got[0].found_by, vec!["q1", "q2"]);
    }
}
