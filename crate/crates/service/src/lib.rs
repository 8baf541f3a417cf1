//! HTTP service, job management and file storage around the story pipeline.

pub mod api;
pub mod jobs;
pub mod runner;
pub mod store;
