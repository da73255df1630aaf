use std::thread;
use std::time::{Duration, Instant};

use fedzip_core::netsim::Clock;

/// Monotonic wall clock; `sleep` really blocks the calling thread.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep(&self, secs: f64) -> f64 {
        let start = Instant::now();
        if secs.is_finite() && secs > 0.0 {
            thread::sleep(Duration::from_secs_f64(secs));
        }
        start.elapsed().as_secs_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sleeps_at_least_requested() {
        let c = SystemClock::new();
        let t0 = c.now();
        let slept = c.sleep(0.02);
        assert!(slept >= 0.02);
        assert!(c.now() - t0 >= 0.02);
        assert!(c.sleep(f64::NAN) < 0.01);
        assert!(c.sleep(-1.0) < 0.01);
    }
}
