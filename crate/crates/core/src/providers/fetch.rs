use std::sync::Arc;
use std::time::Duration;

use super::config::ProviderConfig;
use super::html::{host_of, parse_page};
use super::llm::build_http;
use super::ratelimit::{HostThrottle, RetryPolicy};
use super::{FetchedPage, PageFetcher, ProviderError};
use crate::clock::{Clock, SystemClock};

/// Plain HTTP GET of article pages, throttled to one request per second per
/// host.
pub struct HttpFetcher {
    http: reqwest::blocking::Client,
    throttle: HostThrottle,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl HttpFetcher {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
        Ok(Self {
            http: build_http(cfg.request_timeout)?,
            throttle: HostThrottle::new(Duration::from_secs(1), clock.clone()),
            retry: RetryPolicy::default(),
            clock,
        })
    }

    fn get(&self, url: &str) -> Result<FetchedPage, ProviderError> {
        self.throttle.acquire(&host_of(url));
        let failed = |reason: String| ProviderError::FetchFailed { url: url.to_string(), reason };
        let resp = self.http.get(url).send().map_err(|e| failed(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(failed(format!("HTTP {status}")));
        }
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("text/html")
            .to_ascii_lowercase();
        if !is_html(&content_type) {
            return Err(ProviderError::NonHtmlContent(url.to_string()));
        }
        let body = resp.text().map_err(|e| failed(e.to_string()))?;
        Ok(parse_page(&body, url))
    }
}

pub(crate) fn is_html(content_type: &str) -> bool {
    content_type.contains("html") || content_type.starts_with("text/plain")
}

impl PageFetcher for HttpFetcher {
    fn fetch_page(&self, url: &str) -> Result<FetchedPage, ProviderError> {
        // Only connection-level failures are worth retrying; HTTP errors are final.
        self.retry.run(
            self.clock.as_ref(),
            || self.get(url),
            |e| matches!(e, ProviderError::FetchFailed { reason, .. } if !reason.starts_with("HTTP")),
        )
    }
}
