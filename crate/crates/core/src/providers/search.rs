use std::collections::HashSet;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde_json::Value;

use super::config::ProviderConfig;
use super::html::host_of;
use super::llm::{build_http, is_transient, map_status};
use super::ratelimit::{RateLimiter, RetryPolicy};
use super::{ProviderError, SearchProvider, SerpEntry};
use crate::clock::{Clock, SystemClock};
use crate::retrieval::normalize_url;

pub const MAX_RESULTS: usize = 50;

static YEAR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(19[5-9]\d|20\d\d)\b").unwrap());

pub(crate) fn check_search_args(query: &str, max_results: usize) -> Result<(), ProviderError> {
    if query.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("empty search query".into()));
    }
    if !(1..=MAX_RESULTS).contains(&max_results) {
        return Err(ProviderError::InvalidRequest(format!("max_results {max_results} outside [1, {MAX_RESULTS}]")));
    }
    Ok(())
}

/// Drops entries whose normalized URL was already seen and truncates, keeping
/// engine order.
pub fn dedup_and_truncate(entries: Vec<SerpEntry>, max_results: usize) -> Vec<SerpEntry> {
    let mut seen = HashSet::new();
    entries
        .into_iter()
        .filter(|e| seen.insert(normalize_url(&e.url)))
        .take(max_results)
        .collect()
}

/// Google organic results through SearchAPI.
pub struct SearchApiClient {
    http: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
    country: String,
    language: String,
    limiter: RateLimiter,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl SearchApiClient {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let api_key = cfg
            .search_api_key
            .clone()
            .ok_or_else(|| ProviderError::ProviderUnavailable("SEARCH_API_KEY not set".into()))?;
        let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
        Ok(Self {
            http: build_http(cfg.request_timeout)?,
            base_url: cfg.search_base_url.clone(),
            api_key,
            country: cfg.search_country.clone(),
            language: cfg.search_language.clone(),
            limiter: RateLimiter::new(cfg.rate_limit_per_minute, clock.clone()),
            retry: RetryPolicy::default(),
            clock,
        })
    }

    fn request(&self, query: &str, max_results: usize) -> Result<Value, ProviderError> {
        self.limiter.acquire();
        let num = max_results.to_string();
        let resp = self
            .http
            .get(&self.base_url)
            .query(&[
                ("engine", "google"),
                ("q", query),
                ("num", num.as_str()),
                ("gl", self.country.as_str()),
                ("hl", self.language.as_str()),
                ("api_key", self.api_key.as_str()),
            ])
            .send()
            .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        map_status(status, &text)?;
        serde_json::from_str(&text).map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))
    }
}

/// Maps a SearchAPI response body to entries in engine order.
pub fn parse_organic_results(body: &Value) -> Vec<SerpEntry> {
    let Some(results) = body.get("organic_results").and_then(Value::as_array) else {
        return Vec::new();
    };
    results
        .iter()
        .filter_map(|r| {
            let url = r.get("link")?.as_str()?.to_string();
            url::Url::parse(&url).ok()?;
            let text = |k: &str| r.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
            let year = r
                .get("date")
                .and_then(Value::as_str)
                .and_then(|d| YEAR_RE.captures(d))
                .and_then(|c| c[1].parse().ok());
            Some(SerpEntry {
                source_domain: host_of(&url),
                title: text("title"),
                snippet: text("snippet"),
                published_year: year,
                url,
            })
        })
        .collect()
}

impl SearchProvider for SearchApiClient {
    fn search(&self, query: &str, max_results: usize) -> Result<Vec<SerpEntry>, ProviderError> {
        check_search_args(query, max_results)?;
        let body = self.retry.run(self.clock.as_ref(), || self.request(query, max_results), is_transient)?;
        Ok(dedup_and_truncate(parse_organic_results(&body), max_results))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_organic_results_in_rank_order() {
        let body = json!({"organic_results": [
            {"position": 1, "link": "https://www.a.com/x?utm_source=g", "title": "A", "snippet": "sa", "date": "Mar 3, 2024"},
            {"position": 2, "link": "not a url", "title": "bad"},
            {"position": 3, "link": "https://b.org/y", "title": "B"},
            {"position": 4, "link": "http://a.com/x/", "title": "A again"},
        ]});
        let entries = dedup_and_truncate(parse_organic_results(&body), 10);
        let titles: Vec<_> = entries.iter().map(|e| e.title.as_str()).collect();
        assert_eq!(titles, vec!["A", "B"]);
        assert_eq!(entries[0].published_year, Some(2024));
        assert_eq!(entries[0].source_domain, "a.com");
    }

    #[test]
    fn argument_bounds() {
        assert!(check_search_args("", 5).is_err());
        assert!(check_search_args("q", 0).is_err());
        assert!(check_search_args("q", 51).is_err());
        assert!(check_search_args("q", 50).is_ok());
    }
}
