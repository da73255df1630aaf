use core::sync::atomic::{AtomicU64, Ordering};

/// Time source for benches and emulated transfers.
pub trait Clock: Send + Sync {
    /// Seconds since an arbitrary epoch.
    fn now(&self) -> f64;

    /// Waits (or advances virtual time) by `secs`; returns the elapsed seconds.
    fn sleep(&self, secs: f64) -> f64;
}

/// Deterministic clock counting integer picoseconds. Time only moves through
/// [`Clock::sleep`], so concurrent sleeps commute.
#[derive(Debug, Default)]
pub struct VirtualClock {
    picos: AtomicU64,
}

const PICOS_PER_SEC: f64 = 1e12;

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn picos(&self) -> u64 {
        self.picos.load(Ordering::SeqCst)
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.picos() as f64 / PICOS_PER_SEC
    }

    fn sleep(&self, secs: f64) -> f64 {
        let ticks = libm::round(secs.max(0.0) * PICOS_PER_SEC) as u64;
        self.picos.fetch_add(ticks, Ordering::SeqCst);
        ticks as f64 / PICOS_PER_SEC
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_time_is_exact_and_order_free() {
        let a = VirtualClock::new();
        let b = VirtualClock::new();
        let steps = [0.1, 1.0, 2.5e-6, 3.75];
        for s in steps {
            a.sleep(s);
        }
        for s in steps.iter().rev() {
            b.sleep(*s);
        }
        assert_eq!(a.picos(), b.picos());
        assert_eq!(VirtualClock::new().sleep(1.0), 1.0);
    }
}
