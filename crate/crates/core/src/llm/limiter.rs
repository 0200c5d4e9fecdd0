use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket refilled at a fixed number of requests per minute.
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    /// `per_minute` must be positive; the bucket holds at most `burst` tokens.
    pub fn new(per_minute: u32, burst: u32) -> Self {
        let capacity = burst.max(1) as f64;
        Self {
            capacity,
            per_second: per_minute.max(1) as f64 / 60.0,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a token is available and takes it.
    pub fn acquire(&self) {
        let wait = {
            let mut state = self.state.lock().expect("limiter lock");
            let now = Instant::now();
            let (tokens, last) = *state;
            let refilled = (tokens + now.duration_since(last).as_secs_f64() * self.per_second).min(self.capacity);
            // Reserve the token now; a negative balance queues later callers.
            let balance = refilled - 1.0;
            *state = (balance, now);
            if balance >= 0.0 {
                Duration::ZERO
            } else {
                Duration::from_secs_f64(-balance / self.per_second)
            }
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_then_throttle() {
        let limiter = RateLimiter::new(600, 2);
        let start = Instant::now();
        limiter.acquire();
        limiter.acquire();
        assert!(start.elapsed() < Duration::from_millis(50));
        limiter.acquire();
        // 600/min = one token per 100 ms.
        assert!(start.elapsed() >= Duration::from_millis(90));
    }
}
