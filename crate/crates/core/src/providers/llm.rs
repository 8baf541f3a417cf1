use std::sync::Arc;
use std::time::Duration;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::hash::Hasher;

use super::config::ProviderConfig;
use super::ratelimit::{RateLimiter, RetryPolicy};
use super::{schemas, LlmProvider, ProviderError};
use crate::clock::{Clock, SystemClock};

pub const DEFAULT_MAX_RETRIES: u32 = 3;

/// One structured-output LLM call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredRequest {
    pub task_name: String,
    pub prompt: String,
    pub schema_name: String,
    pub few_shot_examples: Vec<String>,
    /// Total attempts allowed when the output violates the schema.
    pub max_retries: u32,
    /// The structured input the prompt was rendered from. Live providers
    /// only see `prompt`; the offline responder works from this.
    #[serde(default)]
    pub payload: Value,
}

impl StructuredRequest {
    pub fn new(task: &str, schema: &str, prompt: String, payload: Value) -> Self {
        Self {
            task_name: task.to_string(),
            prompt,
            schema_name: schema.to_string(),
            few_shot_examples: Vec::new(),
            max_retries: DEFAULT_MAX_RETRIES,
            payload,
        }
    }

    pub fn with_examples(mut self, examples: &[&str]) -> Self {
        self.few_shot_examples = examples.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn key(&self) -> String {
        prompt_key(&self.prompt)
    }

    /// Prompt as sent to a live model, with earlier validation errors appended.
    pub fn render(&self, feedback: &[String]) -> String {
        let mut out = self.prompt.clone();
        if !self.few_shot_examples.is_empty() {
            out.push_str("\n\nExamples:\n");
            for ex in &self.few_shot_examples {
                out.push_str(ex);
                out.push('\n');
            }
        }
        for (i, f) in feedback.iter().enumerate() {
            out.push_str(&format!(
                "\n\nAttempt {} was rejected: {f}\nReturn a corrected JSON document.",
                i + 1
            ));
        }
        out
    }
}

/// Stable 64-bit key of a prompt: FNV-1a over the whitespace-normalized
/// text, as 16 hex digits. Mock fixtures are stored under this key.
pub fn prompt_key(prompt: &str) -> String {
    let normalized = prompt.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut h = FnvHasher::default();
    h.write(normalized.as_bytes());
    format!("{:016x}", h.finish())
}

/// Calls `llm` until the output validates against the request's schema and
/// passes `check`. Each rejected attempt's error is fed back to the model.
pub fn complete_structured<F>(llm: &dyn LlmProvider, req: &StructuredRequest, check: F) -> Result<Value, ProviderError>
where
    F: Fn(&Value) -> Result<(), String>,
{
    if !schemas::is_registered(&req.schema_name) {
        return Err(ProviderError::UnknownSchema(req.schema_name.clone()));
    }
    if req.prompt.trim().is_empty() {
        return Err(ProviderError::InvalidRequest(format!("{}: empty prompt", req.task_name)));
    }
    let attempts = req.max_retries.max(1);
    let mut feedback = Vec::new();
    for attempt in 1..=attempts {
        let doc = llm.complete(req, &feedback)?;
        match schemas::check(&req.schema_name, &doc).and_then(|_| check(&doc)) {
            Ok(()) => return Ok(doc),
            Err(e) => {
                tracing::warn!(task = %req.task_name, attempt, error = %e, "structured output rejected");
                feedback.push(e);
            }
        }
    }
    Err(ProviderError::SchemaViolationAfterRetries {
        task: req.task_name.clone(),
        attempts,
        last_error: feedback.pop().unwrap_or_default(),
    })
}

const SYSTEM_PROMPT: &str = "You are a meticulous data journalist. Think step by step, \
then answer with a single JSON document that matches the provided schema exactly.";

/// Chat-completions client for OpenAI-compatible endpoints with JSON-schema
/// structured outputs.
pub struct OpenAiCompatible {
    http: reqwest::blocking::Client,
    base_url: String,
    model: String,
    api_key: String,
    limiter: RateLimiter,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl OpenAiCompatible {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let api_key = cfg
            .llm_api_key
            .clone()
            .ok_or_else(|| ProviderError::ProviderUnavailable("LLM_API_KEY not set".into()))?;
        let clock: Arc<dyn Clock> = Arc::new(SystemClock::new());
        Ok(Self {
            http: build_http(cfg.request_timeout)?,
            base_url: cfg.llm_base_url.trim_end_matches('/').to_string(),
            model: cfg.llm_model.clone(),
            api_key,
            limiter: RateLimiter::new(cfg.rate_limit_per_minute, clock.clone()),
            retry: RetryPolicy::default(),
            clock,
        })
    }

    fn send(&self, body: &Value) -> Result<Value, ProviderError> {
        self.limiter.acquire();
        let resp = self
            .http
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        map_status(status, &text)?;
        let envelope: Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        let content = envelope
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::ProviderUnavailable("response without message content".into()))?;
        // Unparseable content is handed back as a string so that schema
        // validation rejects it and the call is retried with feedback.
        Ok(serde_json::from_str(content).unwrap_or_else(|_| Value::String(content.to_string())))
    }
}

impl LlmProvider for OpenAiCompatible {
    fn complete(&self, req: &StructuredRequest, feedback: &[String]) -> Result<Value, ProviderError> {
        let schema = schemas::schema(&req.schema_name)
            .ok_or_else(|| ProviderError::UnknownSchema(req.schema_name.clone()))?;
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": req.render(feedback)},
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": req.schema_name, "schema": schema},
            },
        });
        self.retry.run(self.clock.as_ref(), || self.send(&body), is_transient)
    }
}

pub(crate) fn build_http(timeout: Duration) -> Result<reqwest::blocking::Client, ProviderError> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .user_agent("factstory/0.1")
        .build()
        .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))
}

pub(crate) fn map_status(status: reqwest::StatusCode, body: &str) -> Result<(), ProviderError> {
    if status.is_success() {
        return Ok(());
    }
    let detail = format!("HTTP {status}: {}", body.chars().take(200).collect::<String>());
    if status.as_u16() == 429 {
        Err(ProviderError::QuotaExceeded(detail))
    } else {
        Err(ProviderError::ProviderUnavailable(detail))
    }
}

pub(crate) fn is_transient(e: &ProviderError) -> bool {
    match e {
        ProviderError::QuotaExceeded(_) => true,
        ProviderError::ProviderUnavailable(msg) => !(msg.contains("HTTP 401") || msg.contains("HTTP 403")),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Scripted {
        replies: Mutex<Vec<Value>>,
        seen_feedback: Mutex<Vec<usize>>,
    }

    impl LlmProvider for Scripted {
        fn complete(&self, _req: &StructuredRequest, feedback: &[String]) -> Result<Value, ProviderError> {
            self.seen_feedback.lock().unwrap().push(feedback.len());
            let mut r = self.replies.lock().unwrap();
            Ok(if r.len() > 1 { r.remove(0) } else { r[0].clone() })
        }
    }

    fn req() -> StructuredRequest {
        StructuredRequest::new("t", "cluster_topic", "name this cluster".into(), Value::Null)
    }

    #[test]
    fn key_ignores_whitespace_layout() {
        assert_eq!(prompt_key("a  b\n c"), prompt_key(" a b c "));
        assert_ne!(prompt_key("a b c"), prompt_key("a b d"));
        assert_eq!(prompt_key("hello").len(), 16);
    }

    #[test]
    fn retries_with_feedback_then_succeeds() {
        let llm = Scripted {
            replies: Mutex::new(vec![json!({"nope": 1}), json!({"topic": "Growth"})]),
            seen_feedback: Mutex::new(vec![]),
        };
        let out = complete_structured(&llm, &req(), |_| Ok(())).unwrap();
        assert_eq!(out["topic"], "Growth");
        assert_eq!(*llm.seen_feedback.lock().unwrap(), vec![0, 1]);
    }

    #[test]
    fn persistent_violation_raises_after_max_retries() {
        let llm = Scripted { replies: Mutex::new(vec![json!({})]), seen_feedback: Mutex::new(vec![]) };
        let err = complete_structured(&llm, &req(), |_| Ok(())).unwrap_err();
        assert!(matches!(err, ProviderError::SchemaViolationAfterRetries { attempts: 3, .. }));
        assert_eq!(llm.seen_feedback.lock().unwrap().len(), 3);
    }

    #[test]
    fn semantic_check_failures_are_retried() {
        let llm = Scripted { replies: Mutex::new(vec![json!({"topic": "x"})]), seen_feedback: Mutex::new(vec![]) };
        let err = complete_structured(&llm, &req(), |_| Err("bad id".into())).unwrap_err();
        match err {
            ProviderError::SchemaViolationAfterRetries { last_error, .. } => assert_eq!(last_error, "bad id"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_schema_and_empty_prompt_are_rejected() {
        let llm = Scripted { replies: Mutex::new(vec![json!({})]), seen_feedback: Mutex::new(vec![]) };
        let mut r = req();
        r.schema_name = "nope".into();
        assert!(matches!(complete_structured(&llm, &r, |_| Ok(())), Err(ProviderError::UnknownSchema(_))));
        let mut r = req();
        r.prompt = "  ".into();
        assert!(matches!(complete_structured(&llm, &r, |_| Ok(())), Err(ProviderError::InvalidRequest(_))));
    }

    #[test]
    fn feedback_is_appended_to_rendered_prompt() {
        let r = req().with_examples(&["{\"topic\": \"Reasons\"}"]);
        let p = r.render(&["missing topic".to_string()]);
        assert!(p.starts_with("name this cluster"));
        assert!(p.contains("Examples:"));
        assert!(p.contains("Attempt 1 was rejected: missing topic"));
    }
}
