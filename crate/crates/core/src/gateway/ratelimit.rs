//! Token-bucket rate limiting with an injectable clock.

use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Time source. The live gateway uses [`SystemClock`]; tests drive a
/// virtual clock.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Token bucket with capacity 1: requests are spaced at least
/// `1 / rate_per_second` apart, so the issued rate never exceeds the
/// configured rate over any window.
pub struct TokenBucket {
    rate: f64,
    state: Mutex<State>,
}

struct State {
    tokens: f64,
    last_refill: Instant,
}

impl TokenBucket {
    pub fn new(rate_per_second: f64, now: Instant) -> Self {
        assert!(rate_per_second > 0.0, "rate must be positive");
        Self {
            rate: rate_per_second,
            state: Mutex::new(State {
                tokens: 1.0,
                last_refill: now,
            }),
        }
    }

    /// Take a token if available, otherwise return how long to wait before
    /// retrying.
    pub fn try_acquire(&self, now: Instant) -> Option<Duration> {
        let mut state = self.state.lock().unwrap();
        let elapsed = now.saturating_duration_since(state.last_refill);
        state.tokens = (state.tokens + elapsed.as_secs_f64() * self.rate).min(1.0);
        state.last_refill = now;
        if state.tokens >= 1.0 {
            state.tokens -= 1.0;
            None
        } else {
            let deficit = 1.0 - state.tokens;
            Some(Duration::from_secs_f64(deficit / self.rate))
        }
    }

    /// Block (via the clock) until a token is available.
    pub fn acquire(&self, clock: &dyn Clock) {
        loop {
            match self.try_acquire(clock.now()) {
                None => return,
                Some(wait) => clock.sleep(wait),
            }
        }
    }
}
