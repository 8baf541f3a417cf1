//! Story-generation jobs and the in-memory job table.

use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use factstory_core::pipeline::Stage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_ACTIVE_JOBS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Retrieving,
    Extracting,
    Organizing,
    Composing,
    Ready,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Ready | JobState::Failed)
    }

    /// Forward moves only; `failed` from any non-terminal state.
    pub fn can_advance_to(self, next: JobState) -> bool {
        if self.is_terminal() {
            return false;
        }
        next == JobState::Failed || next > self
    }
}

impl From<Stage> for JobState {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Retrieving => JobState::Retrieving,
            Stage::Extracting => JobState::Extracting,
            Stage::Organizing => JobState::Organizing,
            Stage::Composing => JobState::Composing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub query: String,
    pub state: JobState,
    pub progress: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub story_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
    /// When each state was entered.
    pub timestamps: BTreeMap<JobState, DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JobError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("TooManyActiveJobs: {active} job(s) already running (limit {limit})")]
    TooManyActiveJobs { active: usize, limit: usize },
    #[error("NotFound: no job {0}")]
    NotFound(String),
    #[error("job {job_id} cannot move from {from:?} to {to:?}")]
    InvalidTransition { job_id: String, from: JobState, to: JobState },
}

/// Thread-safe job table. Every mutation goes through [`JobTable::update`],
/// which refuses state regressions.
#[derive(Debug)]
pub struct JobTable {
    inner: Mutex<Inner>,
    max_active: usize,
}

#[derive(Debug, Default)]
struct Inner {
    jobs: BTreeMap<u64, Job>,
    next: u64,
}

fn job_number(id: &str) -> Option<u64> {
    id.strip_prefix('j')?.parse().ok()
}

impl JobTable {
    pub fn new(max_active: usize) -> Self {
        Self { inner: Mutex::new(Inner { jobs: BTreeMap::new(), next: 1 }), max_active }
    }

    /// Restores a persisted table. Jobs that were still running when the
    /// index was written can never finish, so they are marked failed.
    pub fn restore(max_active: usize, jobs: Vec<Job>, now: DateTime<Utc>) -> Self {
        let table = Self::new(max_active);
        {
            let mut inner = table.inner.lock().unwrap();
            for mut job in jobs {
                let Some(n) = job_number(&job.job_id) else { continue };
                if !job.state.is_terminal() {
                    job.state = JobState::Failed;
                    job.error_detail = Some("Interrupted: service restarted before the job finished".into());
                    job.timestamps.insert(JobState::Failed, now);
                }
                inner.next = inner.next.max(n + 1);
                inner.jobs.insert(n, job);
            }
        }
        table
    }

    pub fn max_active(&self) -> usize {
        self.max_active
    }

    pub fn active_count(&self) -> usize {
        self.inner.lock().unwrap().jobs.values().filter(|j| !j.state.is_terminal()).count()
    }

    /// Validates the query and registers a queued job.
    pub fn create(&self, query: &str, now: DateTime<Utc>) -> Result<Job, JobError> {
        let query = factstory_core::pipeline::check_query(query).map_err(|e| JobError::InvalidQuery(e.to_string()))?;
        let mut inner = self.inner.lock().unwrap();
        let active = inner.jobs.values().filter(|j| !j.state.is_terminal()).count();
        if active >= self.max_active {
            return Err(JobError::TooManyActiveJobs { active, limit: self.max_active });
        }
        let n = inner.next;
        inner.next += 1;
        let job = Job {
            job_id: format!("j{n}"),
            query,
            state: JobState::Queued,
            progress: 0.0,
            story_id: None,
            error_detail: None,
            timestamps: BTreeMap::from([(JobState::Queued, now)]),
        };
        inner.jobs.insert(n, job.clone());
        Ok(job)
    }

    pub fn get(&self, job_id: &str) -> Result<Job, JobError> {
        let inner = self.inner.lock().unwrap();
        job_number(job_id).and_then(|n| inner.jobs.get(&n)).cloned().ok_or_else(|| JobError::NotFound(job_id.to_string()))
    }

    pub fn all(&self) -> Vec<Job> {
        self.inner.lock().unwrap().jobs.values().cloned().collect()
    }

    /// Moves a job forward. Progress never decreases; repeating the current
    /// state only updates progress.
    pub fn advance(&self, job_id: &str, state: JobState, progress: f64, now: DateTime<Utc>) -> Result<Job, JobError> {
        let mut inner = self.inner.lock().unwrap();
        let job = job_number(job_id)
            .and_then(|n| inner.jobs.get_mut(&n))
            .ok_or_else(|| JobError::NotFound(job_id.to_string()))?;
        if state != job.state {
            if !job.state.can_advance_to(state) {
                return Err(JobError::InvalidTransition { job_id: job_id.to_string(), from: job.state, to: state });
            }
            job.state = state;
            job.timestamps.insert(state, now);
        } else if job.state.is_terminal() {
            return Err(JobError::InvalidTransition { job_id: job_id.to_string(), from: job.state, to: state });
        }
        job.progress = job.progress.max(progress.clamp(0.0, 1.0));
        Ok(job.clone())
    }

    pub fn finish(&self, job_id: &str, story_id: &str, now: DateTime<Utc>) -> Result<Job, JobError> {
        self.advance(job_id, JobState::Ready, 1.0, now)?;
        let mut inner = self.inner.lock().unwrap();
        let job = inner.jobs.get_mut(&job_number(job_id).unwrap()).unwrap();
        job.story_id = Some(story_id.to_string());
        Ok(job.clone())
    }

    pub fn fail(&self, job_id: &str, detail: &str, now: DateTime<Utc>) -> Result<Job, JobError> {
        let progress = self.get(job_id)?.progress;
        self.advance(job_id, JobState::Failed, progress, now)?;
        let mut inner = self.inner.lock().unwrap();
        let job = inner.jobs.get_mut(&job_number(job_id).unwrap()).unwrap();
        job.error_detail = Some(detail.to_string());
        Ok(job.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn now() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    #[test]
    fn transitions() {
        use JobState::*;
        assert!(Queued.can_advance_to(Extracting));
        assert!(Composing.can_advance_to(Failed));
        assert!(!Extracting.can_advance_to(Retrieving));
        assert!(!Ready.can_advance_to(Failed));
        assert!(!Failed.can_advance_to(Ready));
    }

    #[test]
    fn cap_and_validation() {
        let t = JobTable::new(2);
        assert!(matches!(t.create("", now()), Err(JobError::InvalidQuery(_))));
        let a = t.create("one", now()).unwrap();
        assert_eq!((a.state, a.progress), (JobState::Queued, 0.0));
        t.create("two", now()).unwrap();
        assert!(matches!(t.create("three", now()), Err(JobError::TooManyActiveJobs { active: 2, limit: 2 })));
        t.fail(&a.job_id, "boom", now()).unwrap();
        assert!(t.create("three", now()).is_ok());
    }

    #[test]
    fn no_regression() {
        let t = JobTable::new(2);
        let j = t.create("q", now()).unwrap().job_id;
        t.advance(&j, JobState::Extracting, 0.3, now()).unwrap();
        assert!(t.advance(&j, JobState::Retrieving, 0.1, now()).is_err());
        let same = t.advance(&j, JobState::Extracting, 0.1, now()).unwrap();
        assert_eq!(same.progress, 0.3);
        let done = t.finish(&j, "s1", now()).unwrap();
        assert_eq!((done.state, done.story_id.as_deref(), done.progress), (JobState::Ready, Some("s1"), 1.0));
        assert!(t.fail(&j, "late", now()).is_err());
        assert!(matches!(t.get("j99"), Err(JobError::NotFound(_))));
    }

    #[test]
    fn restore_fails_interrupted_jobs() {
        let t = JobTable::new(2);
        let a = t.create("a", now()).unwrap().job_id;
        let b = t.create("b", now()).unwrap().job_id;
        t.finish(&a, "s1", now()).unwrap();
        let r = JobTable::restore(2, t.all(), now());
        assert_eq!(r.get(&a).unwrap().state, JobState::Ready);
        assert_eq!(r.get(&b).unwrap().state, JobState::Failed);
        assert_eq!(r.create("c", now()).unwrap().job_id, "j3");
    }
}
