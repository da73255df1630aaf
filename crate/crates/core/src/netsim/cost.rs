use alloc::collections::BTreeMap;

use super::Clock;
use crate::{Error, Result};

/// Link bandwidths in bits per second, with optional per-client overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub bandwidth_bps: f64,
    pub per_client: BTreeMap<usize, f64>,
}

impl NetworkModel {
    pub fn new(bandwidth_bps: f64) -> Self {
        Self { bandwidth_bps, per_client: BTreeMap::new() }
    }

    pub fn with_client(mut self, client: usize, bps: f64) -> Self {
        self.per_client.insert(client, bps);
        self
    }

    pub fn bandwidth_for(&self, client: usize) -> f64 {
        self.per_client.get(&client).copied().unwrap_or(self.bandwidth_bps)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |b: f64| b.is_finite() && b > 0.0;
        if !ok(self.bandwidth_bps) || !self.per_client.values().all(|&b| ok(b)) {
            return Err(Error::InvalidConfig("bandwidths must be finite and positive"));
        }
        Ok(())
    }
}

/// Inputs of the compress-or-not inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostInputs {
    pub compress_seconds: f64,
    pub decompress_seconds: f64,
    pub original_bytes: f64,
    pub compressed_bytes: f64,
}

impl CostInputs {
    pub fn overhead(&self) -> f64 {
        self.compress_seconds + self.decompress_seconds
    }

    /// `t_C + t_D + S'/B` in seconds.
    pub fn compressed_path_seconds(&self, bps: f64) -> f64 {
        self.overhead() + transfer_time_at(self.compressed_bytes, bps)
    }

    pub fn raw_path_seconds(&self, bps: f64) -> f64 {
        transfer_time_at(self.original_bytes, bps)
    }
}

pub fn transfer_time_at(bytes: f64, bps: f64) -> f64 {
    bytes * 8.0 / bps
}

pub fn transfer_time(bytes: f64, model: &NetworkModel) -> f64 {
    transfer_time_at(bytes, model.bandwidth_bps)
}

/// `0 < t_C + t_D + S'·8/B < S·8/B`.
pub fn worthwhile(c: &CostInputs, model: &NetworkModel) -> bool {
    let lhs = c.compressed_path_seconds(model.bandwidth_bps);
    0.0 < lhs && lhs < c.raw_path_seconds(model.bandwidth_bps)
}

/// Bandwidth `B* = 8(S - S') / (t_C + t_D)` below which compressing pays off.
pub fn breakeven_bandwidth(c: &CostInputs) -> Result<f64> {
    if c.compressed_bytes >= c.original_bytes {
        return Err(Error::NoBreakeven);
    }
    if c.overhead() <= 0.0 {
        return Err(Error::InvalidConfig("break-even needs t_C + t_D > 0"));
    }
    Ok(8.0 * (c.original_bytes - c.compressed_bytes) / c.overhead())
}

/// Holds the sender for the time `bytes` take on the model's default link.
pub fn emulate_send(bytes: f64, model: &NetworkModel, clock: &dyn Clock) -> f64 {
    emulate_send_at(bytes, model.bandwidth_bps, clock)
}

pub(crate) fn emulate_send_at(bytes: f64, bps: f64, clock: &dyn Clock) -> f64 {
    if bytes <= 0.0 {
        return 0.0;
    }
    clock.sleep(transfer_time_at(bytes, bps))
}
