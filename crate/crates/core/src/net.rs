//! Shared HTTP plumbing: an injectable clock, exponential-backoff retry
//! policy, a request-rate limiter, and a process-wide outbound switch.
//!
//! Every HTTP client in the crate obtains its agent through [`agent`], so
//! calling [`deny_outbound`] turns any network attempt into
//! [`NetError::OutboundDenied`] without touching the callers.

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

static OUTBOUND_DENIED: AtomicBool = AtomicBool::new(false);

/// Forbid all outbound HTTP for the rest of the process (or until re-allowed).
pub fn deny_outbound() {
    OUTBOUND_DENIED.store(true, Ordering::SeqCst);
}

pub fn allow_outbound() {
    OUTBOUND_DENIED.store(false, Ordering::SeqCst);
}

pub fn outbound_allowed() -> bool {
    !OUTBOUND_DENIED.load(Ordering::SeqCst)
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("outbound network access is disabled in this process")]
    OutboundDenied,
    #[error("HTTP {status} from {url}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("transport error for {url}: {message}")]
    Transport { url: String, message: String },
    #[error("malformed response from {url}: {message}")]
    Decode { url: String, message: String },
}

impl NetError {
    /// Whether a retry may plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            NetError::Status { status, .. } => *status == 429 || *status >= 500,
            NetError::Transport { .. } => true,
            NetError::OutboundDenied | NetError::Decode { .. } => false,
        }
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            NetError::Status { status, .. } => Some(*status),
            _ => None,
        }
    }
}

/// A blocking HTTP agent, or an error if outbound access is disabled.
pub fn agent(timeout: Duration) -> Result<ureq::Agent, NetError> {
    if !outbound_allowed() {
        return Err(NetError::OutboundDenied);
    }
    Ok(ureq::AgentBuilder::new().timeout(timeout).build())
}

/// Convert a ureq call result into a JSON body or a classified error.
pub fn read_json(url: &str, result: Result<ureq::Response, ureq::Error>) -> Result<serde_json::Value, NetError> {
    match result {
        Ok(resp) => resp.into_json().map_err(|e| NetError::Decode { url: url.to_string(), message: e.to_string() }),
        Err(ureq::Error::Status(status, resp)) => {
            Err(NetError::Status { url: url.to_string(), status, body: resp.into_string().unwrap_or_default() })
        }
        Err(ureq::Error::Transport(t)) => Err(NetError::Transport { url: url.to_string(), message: t.to_string() }),
    }
}

/// Source of time. Tests inject [`ManualClock`] so backoff and throttling
/// can be asserted without sleeping.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Virtual clock: `sleep` advances time instantly and is recorded.
#[derive(Debug, Default)]
pub struct ManualClock {
    state: Mutex<(Duration, Vec<Duration>)>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        self.state.lock().unwrap().0 += d;
    }

    /// Every sleep requested so far, in order.
    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().unwrap().1.clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.state.lock().unwrap().0
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().unwrap();
        s.0 += d;
        s.1.push(d);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    /// Total attempts including the first one.
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 4, initial_backoff_ms: 500, multiplier: 2.0, max_backoff_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.multiplier.powi(retry as i32);
        Duration::from_millis(ms.min(self.max_backoff_ms as f64) as u64)
    }

    /// Run `op` until it succeeds, fails permanently, or attempts run out.
    pub fn run<T, E>(
        &self,
        clock: &dyn Clock,
        is_transient: impl Fn(&E) -> bool,
        mut op: impl FnMut(u32) -> Result<T, E>,
    ) -> Result<T, E> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if attempt + 1 < attempts && is_transient(&e) => {
                    log::debug!("attempt {} failed, backing off", attempt + 1);
                    clock.sleep(self.backoff(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Spaces request starts at least `1 / rate` seconds apart. Cloning shares
/// the schedule, so one limiter throttles every clone process-wide.
#[derive(Clone)]
pub struct RateLimiter {
    interval: Duration,
    clock: Arc<dyn Clock>,
    next_slot: Arc<Mutex<Option<Duration>>>,
}

impl RateLimiter {
    /// `per_second <= 0` disables throttling.
    pub fn new(per_second: f64, clock: Arc<dyn Clock>) -> Self {
        let interval = if per_second > 0.0 { Duration::from_secs_f64(1.0 / per_second) } else { Duration::ZERO };
        Self { interval, clock, next_slot: Arc::new(Mutex::new(None)) }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Block until the caller may start a request.
    pub fn acquire(&self) {
        let wait = {
            let mut slot = self.next_slot.lock().unwrap();
            let now = self.clock.now();
            let start = match *slot {
                Some(t) if t > now => t,
                _ => now,
            };
            *slot = Some(start + self.interval);
            start.saturating_sub(now)
        };
        if !wait.is_zero() {
            self.clock.sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_and_caps() {
        let p = RetryPolicy { max_attempts: 5, initial_backoff_ms: 100, multiplier: 2.0, max_backoff_ms: 300 };
        assert_eq!(p.backoff(0), Duration::from_millis(100));
        assert_eq!(p.backoff(1), Duration::from_millis(200));
        assert_eq!(p.backoff(2), Duration::from_millis(300));
    }

    #[test]
    fn retry_stops_on_permanent_error() {
        let clock = ManualClock::new();
        let mut calls = 0;
        let r: Result<(), &str> = RetryPolicy::default().run(
            &clock,
            |e| *e == "transient",
            |_| {
                calls += 1;
                Err("fatal")
            },
        );
        assert!(r.is_err());
        assert_eq!(calls, 1);
        assert!(clock.sleeps().is_empty());
    }

    #[test]
    fn retry_exhausts_attempts() {
        let clock = ManualClock::new();
        let mut calls = 0;
        let policy = RetryPolicy { max_attempts: 3, ..Default::default() };
        let r: Result<(), &str> = policy.run(
            &clock,
            |_| true,
            |_| {
                calls += 1;
                Err("transient")
            },
        );
        assert!(r.is_err());
        assert_eq!(calls, 3);
        assert_eq!(clock.sleeps().len(), 2);
    }

    #[test]
    fn limiter_spaces_requests_on_mock_clock() {
        let clock = Arc::new(ManualClock::new());
        let limiter = RateLimiter::new(4.0, clock.clone());
        let n = 9;
        for _ in 0..n {
            limiter.acquire();
        }
        // (N - 1) / r seconds at minimum.
        assert!(clock.now() >= Duration::from_secs_f64((n - 1) as f64 / 4.0) - Duration::from_nanos(1));
    }

    #[test]
    fn deny_switch_blocks_agent_creation() {
        deny_outbound();
        assert!(matches!(agent(Duration::from_secs(1)), Err(NetError::OutboundDenied)));
        allow_outbound();
        assert!(agent(Duration::from_secs(1)).is_ok());
    }
}
