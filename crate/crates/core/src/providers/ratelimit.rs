//! Request throttling and retry backoff for live providers.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::clock::Clock;

const WINDOW: Duration = Duration::from_secs(60);

/// Sliding-window limiter: at most `per_minute` acquisitions in any 60 s
/// window. Acquisition is serialized, so concurrent callers queue up.
pub struct RateLimiter {
    per_minute: usize,
    clock: Arc<dyn Clock>,
    dispatched: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(per_minute: u32, clock: Arc<dyn Clock>) -> Self {
        Self { per_minute: per_minute.max(1) as usize, clock, dispatched: Mutex::new(VecDeque::new()) }
    }

    /// Blocks until a request may be sent and records it. Returns the time
    /// spent waiting.
    pub fn acquire(&self) -> Duration {
        let mut log = self.dispatched.lock().unwrap();
        let mut waited = Duration::ZERO;
        loop {
            let now = self.clock.elapsed();
            while log.front().is_some_and(|&t| now >= t + WINDOW) {
                log.pop_front();
            }
            if log.len() < self.per_minute {
                log.push_back(now);
                return waited;
            }
            let wait = *log.front().unwrap() + WINDOW - now;
            self.clock.sleep(wait);
            waited += wait;
        }
    }
}

/// Per-host politeness: one request per second to any single host.
pub struct HostThrottle {
    min_gap: Duration,
    clock: Arc<dyn Clock>,
    last: Mutex<HashMap<String, Duration>>,
}

impl HostThrottle {
    pub fn new(min_gap: Duration, clock: Arc<dyn Clock>) -> Self {
        Self { min_gap, clock, last: Mutex::new(HashMap::new()) }
    }

    pub fn acquire(&self, host: &str) {
        let mut last = self.last.lock().unwrap();
        let now = self.clock.elapsed();
        if let Some(&prev) = last.get(host) {
            if now < prev + self.min_gap {
                self.clock.sleep(prev + self.min_gap - now);
            }
        }
        last.insert(host.to_string(), self.clock.elapsed());
    }
}

/// Exponential backoff: 1 s, 2 s, 4 s... capped at `max_attempts` tries.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    pub fn delay(&self, failed_attempt: u32) -> Duration {
        self.base_delay * 2u32.pow(failed_attempt.min(16))
    }

    /// Runs `op` until it succeeds, it returns a non-retryable error, or the
    /// attempts run out.
    pub fn run<T, E>(
        &self,
        clock: &dyn Clock,
        mut op: impl FnMut() -> Result<T, E>,
        retryable: impl Fn(&E) -> bool,
    ) -> Result<T, E> {
        let mut attempt = 0;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if retryable(&e) && attempt + 1 < self.max_attempts => {
                    clock.sleep(self.delay(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
