use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Live,
    Mock,
}

impl std::str::FromStr for ProviderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(ProviderMode::Live),
            "mock" => Ok(ProviderMode::Mock),
            other => Err(format!("unknown mode {other:?}, expected live or mock")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub search_base_url: String,
    pub llm_base_url: String,
    pub embed_base_url: String,
    pub llm_model: String,
    pub embed_model: String,
    pub search_api_key: Option<String>,
    pub llm_api_key: Option<String>,
    pub embed_api_key: Option<String>,
    /// Search engine locale parameters (`gl`, `hl`).
    pub search_country: String,
    pub search_language: String,
    pub request_timeout: Duration,
    pub rate_limit_per_minute: u32,
    pub fixture_dir: PathBuf,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Mock,
            search_base_url: "https://www.searchapi.io/api/v1/search".to_string(),
            llm_base_url: "https://api.openai.com/v1".to_string(),
            embed_base_url: "https://api.openai.com/v1".to_string(),
            llm_model: "gpt-4o-2024-08-06".to_string(),
            embed_model: "text-embedding-3-large".to_string(),
            search_api_key: None,
            llm_api_key: None,
            embed_api_key: None,
            search_country: "us".to_string(),
            search_language: "en".to_string(),
            request_timeout: Duration::from_secs(60),
            rate_limit_per_minute: 60,
            fixture_dir: PathBuf::from("fixtures"),
        }
    }
}

impl ProviderConfig {
    pub fn mock(fixture_dir: impl Into<PathBuf>) -> Self {
        Self { mode: ProviderMode::Mock, fixture_dir: fixture_dir.into(), ..Default::default() }
    }

    /// Reads `SEARCH_API_KEY`, `LLM_API_KEY`, `EMBED_API_KEY`, `LLM_BASE_URL`
    /// and `EMBED_BASE_URL`.
    pub fn from_env(mode: ProviderMode, fixture_dir: impl Into<PathBuf>) -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let mut cfg = Self { mode, fixture_dir: fixture_dir.into(), ..Default::default() };
        cfg.search_api_key = var("SEARCH_API_KEY");
        cfg.llm_api_key = var("LLM_API_KEY");
        cfg.embed_api_key = var("EMBED_API_KEY");
        if let Some(u) = var("LLM_BASE_URL") {
            cfg.llm_base_url = u;
        }
        if let Some(u) = var("EMBED_BASE_URL") {
            cfg.embed_base_url = u;
        }
        cfg
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        match self.mode {
            ProviderMode::Live => {
                let missing: Vec<&str> = [
                    ("SEARCH_API_KEY", &self.search_api_key),
                    ("LLM_API_KEY", &self.llm_api_key),
                    ("EMBED_API_KEY", &self.embed_api_key),
                ]
                .into_iter()
                .filter(|(_, v)| v.is_none())
                .map(|(k, _)| k)
                .collect();
                if missing.is_empty() {
                    Ok(())
                } else {
                    Err(ProviderError::ProviderUnavailable(format!(
                        "missing credentials: {}",
                        missing.join(", ")
                    )))
                }
            }
            ProviderMode::Mock => {
                if self.fixture_dir.is_dir() {
                    Ok(())
                } else {
                    Err(ProviderError::ProviderUnavailable(format!(
                        "fixture directory {} does not exist",
                        self.fixture_dir.display()
                    )))
                }
            }
        }
    }
}
