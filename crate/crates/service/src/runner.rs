//! What a job actually runs.

use std::sync::Arc;

use factstory_core::clock::Clock;
use factstory_core::model::StoryDocument;
use factstory_core::pipeline::{run_pipeline, PipelineConfig, Stage};
use factstory_core::providers::Providers;

pub trait StoryRunner: Send + Sync {
    /// Builds a story for `query`; the error string becomes the job's
    /// `error_detail`.
    fn run(&self, query: &str, progress: &(dyn Fn(Stage, f64) + Sync)) -> Result<StoryDocument, String>;
}

/// Runs the full pipeline with fixed providers and settings.
pub struct PipelineRunner {
    pub providers: Providers,
    pub clock: Arc<dyn Clock>,
    pub config: PipelineConfig,
}

impl StoryRunner for PipelineRunner {
    fn run(&self, query: &str, progress: &(dyn Fn(Stage, f64) + Sync)) -> Result<StoryDocument, String> {
        let cfg = PipelineConfig { query: Some(query.to_string()), ..self.config.clone() };
        run_pipeline(&self.providers, self.clock.as_ref(), &cfg, progress).map_err(|e| e.to_string())
    }
}
