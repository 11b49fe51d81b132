use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Spaces requests at least `1 / rate` seconds apart across all threads, so
/// no one-second window sees more than `rate` of them (plus one at the edge).
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `per_second` must be positive.
    pub fn new(per_second: f64) -> Self {
        RateLimiter { interval: Duration::from_secs_f64(1.0 / per_second), next: Mutex::new(None) }
    }

    /// Blocks until the caller's slot comes up.
    pub fn acquire(&self) {
        let slot = {
            let mut next = self.next.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        let wait = slot.saturating_duration_since(Instant::now());
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn concurrent_callers_are_spaced() {
        let limiter = Arc::new(RateLimiter::new(50.0));
        let stamps = Arc::new(Mutex::new(Vec::new()));
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let (limiter, stamps) = (limiter.clone(), stamps.clone());
                thread::spawn(move || {
                    for _ in 0..10 {
                        limiter.acquire();
                        stamps.lock().unwrap().push(Instant::now());
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let mut stamps = stamps.lock().unwrap().clone();
        stamps.sort();
        let span = *stamps.last().unwrap() - stamps[0];
        // 40 slots 20 ms apart
        assert!(span >= Duration::from_millis(39 * 20 - 5), "{span:?}");
    }
}
