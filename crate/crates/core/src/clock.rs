//! Time source used by rate limiting, retries and timestamps. Tests and mock
//! runs use [`FakeClock`] so that nothing actually sleeps and timestamps are
//! reproducible.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};

pub trait Clock: Send + Sync {
    /// Wall-clock time, used for `created_at`/`retrieved_at` stamps.
    fn now_utc(&self) -> DateTime<Utc>;
    /// Monotonic time since the clock was created.
    fn elapsed(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_utc(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Clock whose time only moves when somebody sleeps on it.
#[derive(Debug)]
pub struct FakeClock {
    epoch: DateTime<Utc>,
    offset: Mutex<Duration>,
}

impl FakeClock {
    pub fn new(epoch: DateTime<Utc>) -> Self {
        Self { epoch, offset: Mutex::new(Duration::ZERO) }
    }

    /// Fixed epoch used by mock pipeline runs.
    pub fn mock_epoch() -> Self {
        Self::new(Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap())
    }

    pub fn advance(&self, d: Duration) {
        *self.offset.lock().unwrap() += d;
    }
}

impl Clock for FakeClock {
    fn now_utc(&self) -> DateTime<Utc> {
        // Timestamps stay at the epoch so that documents are reproducible
        // regardless of how many simulated sleeps happened.
        self.epoch
    }

    fn elapsed(&self) -> Duration {
        *self.offset.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}
