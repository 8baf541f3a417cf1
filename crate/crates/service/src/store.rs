//! File-backed storage: one JSON file per story plus a jobs index.

use std::io::Write;
use std::path::{Path, PathBuf};

use factstory_core::model::StoryDocument;
use factstory_core::wire::to_canonical_json;
use thiserror::Error;

use crate::jobs::Job;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("NotFound: no story {0}")]
    NotFound(String),
    #[error("invalid story id {0:?}")]
    InvalidId(String),
    #[error("storage error at {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

fn io_err(path: &Path, e: impl ToString) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), reason: e.to_string() }
}

/// Story ids become file names, so only `[A-Za-z0-9_-]` is accepted.
fn check_id(id: &str) -> Result<(), StoreError> {
    if id.is_empty() || id.len() > 128 || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(StoreError::InvalidId(id.to_string()));
    }
    Ok(())
}

/// Write to a temp file in the same directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let stories = root.join("stories");
        std::fs::create_dir_all(&stories).map_err(|e| io_err(&stories, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn story_path(&self, id: &str) -> PathBuf {
        self.root.join("stories").join(format!("{id}.json"))
    }

    fn jobs_path(&self) -> PathBuf {
        self.root.join("jobs.json")
    }

    pub fn put_story(&self, doc: &StoryDocument) -> Result<(), StoreError> {
        check_id(&doc.story_id)?;
        write_atomic(&self.story_path(&doc.story_id), to_canonical_json(doc).as_bytes())
    }

    /// The stored bytes, unchanged.
    pub fn get_story(&self, id: &str) -> Result<String, StoreError> {
        check_id(id).map_err(|_| StoreError::NotFound(id.to_string()))?;
        let path = self.story_path(id);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::NotFound(id.to_string())),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    pub fn save_jobs(&self, jobs: &[Job]) -> Result<(), StoreError> {
        let text = serde_json::to_string_pretty(jobs).map_err(|e| io_err(&self.jobs_path(), e))?;
        write_atomic(&self.jobs_path(), text.as_bytes())
    }

    pub fn load_jobs(&self) -> Result<Vec<Job>, StoreError> {
        let path = self.jobs_path();
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| io_err(&path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(io_err(&path, e)),
        }
    }
}
