use std::sync::Arc;

use serde_json::{json, Value};

use super::config::ProviderConfig;
use super::llm::{build_http, is_transient, map_status};
use super::ratelimit::{RateLimiter, RetryPolicy};
use super::{Embedder, ProviderError};
use crate::clock::{Clock, SystemClock};

/// Scales `v` to unit L2 norm. Returns `false` for the zero vector.
pub fn l2_normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

pub struct OpenAiEmbedder {
    http: reqwest::blocking::Client,
    base_url: String,
    model: String,
    api_key: String,
    limiter: RateLimiter,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl OpenAiEmbedder {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let api_key = cfg
            .embed_api_key
            .clone()
            .ok_or_else(|| ProviderError::ProviderUnavailable("EMBED_API_KEY not set".into()))?;
        let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
        Ok(Self {
            http: build_http(cfg.request_timeout)?,
            base_url: cfg.embed_base_url.trim_end_matches('/').to_string(),
            model: cfg.embed_model.clone(),
            api_key,
            limiter: RateLimiter::new(cfg.rate_limit_per_minute, clock.clone()),
            retry: RetryPolicy::default(),
            clock,
        })
    }

    fn request(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        self.limiter.acquire();
        let resp = self
            .http
            .post(format!("{}/embeddings", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&json!({"model": self.model, "input": texts}))
            .send()
            .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        map_status(status, &text)?;
        let body: Value = serde_json::from_str(&text).map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        parse_embeddings(&body, texts.len())
    }
}

fn parse_embeddings(body: &Value, expected: usize) -> Result<Vec<Vec<f64>>, ProviderError> {
    let bad = || ProviderError::ProviderUnavailable("malformed embedding response".into());
    let data = body.get("data").and_then(Value::as_array).ok_or_else(bad)?;
    let mut out = vec![Vec::new(); expected];
    for item in data {
        let idx = item.get("index").and_then(Value::as_u64).ok_or_else(bad)? as usize;
        let mut v: Vec<f64> = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(bad)?
            .iter()
            .map(|x| x.as_f64().ok_or_else(bad))
            .collect::<Result<_, _>>()?;
        if idx >= expected || !l2_normalize(&mut v) {
            return Err(bad());
        }
        out[idx] = v;
    }
    let dim = out.first().map_or(0, Vec::len);
    if out.iter().any(|v| v.is_empty() || v.len() != dim) {
        return Err(bad());
    }
    Ok(out)
}

impl Embedder for OpenAiEmbedder {
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::InvalidRequest("no texts to embed".into()));
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(256) {
            out.extend(self.retry.run(self.clock.as_ref(), || self.request(chunk), is_transient)?);
        }
        Ok(out)
    }
}
