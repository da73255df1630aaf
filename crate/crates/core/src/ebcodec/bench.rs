use alloc::vec::Vec;

use super::{max_abs_error, CodecId, CodecRegistry, CodecSpec};
use crate::netsim::Clock;
use crate::stats::median;
use crate::{Error, Result};

/// Timing, ratio and error statistics for one (codec, bound) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecBenchRecord {
    pub codec: CodecId,
    pub epsilon: f64,
    pub eps_abs: f64,
    pub compress_seconds: f64,
    pub decompress_seconds: f64,
    pub original_bytes: usize,
    pub compressed_bytes: usize,
    pub ratio: f64,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
}

impl CodecBenchRecord {
    pub fn overhead_seconds(&self) -> f64 {
        self.compress_seconds + self.decompress_seconds
    }
}

/// Median compress/decompress times over `repetitions`; ratio and error from
/// the first round trip. Fails if the codec violates its bound.
pub fn bench_codec(
    registry: &CodecRegistry,
    values: &[f32],
    spec: &CodecSpec,
    repetitions: usize,
    clock: &dyn Clock,
) -> Result<CodecBenchRecord> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be at least 1"));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut tc = Vec::with_capacity(repetitions);
    let mut td = Vec::with_capacity(repetitions);
    let mut first = None;
    for _ in 0..repetitions {
        let t0 = clock.now();
        let blob = registry.compress(values, spec)?;
        let t1 = clock.now();
        let back = registry.decompress(&blob)?;
        let t2 = clock.now();
        tc.push(t1 - t0);
        td.push(t2 - t1);
        if first.is_none() {
            first = Some((blob, back));
        }
    }
    let (blob, back) = first.expect("at least one repetition");
    let max_err = max_abs_error(values, &back);
    let honors = registry.get(spec.codec)?.honors_pointwise_bound();
    if honors && max_err > blob.eps_abs {
        return Err(Error::CorruptPayload("codec exceeded its error bound"));
    }
    let mean_err = values
        .iter()
        .zip(&back)
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).abs())
        .sum::<f64>()
        / values.len() as f64;
    let original_bytes = values.len() * 4;
    let compressed_bytes = blob.serialized_len();
    Ok(CodecBenchRecord {
        codec: spec.codec,
        epsilon: spec.bound.epsilon,
        eps_abs: blob.eps_abs,
        compress_seconds: median(&tc),
        decompress_seconds: median(&td),
        original_bytes,
        compressed_bytes,
        ratio: original_bytes as f64 / compressed_bytes as f64,
        max_abs_error: max_err,
        mean_abs_error: mean_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::VirtualClock;
    use alloc::vec;

    #[test]
    fn constant_megabyte() {
        let values = vec![0.25f32; 262_144];
        let r = bench_codec(&CodecRegistry::default(), &values, &CodecSpec::pq_rel(1e-2), 3, &VirtualClock::new())
            .unwrap();
        assert!(r.ratio > 50.0, "{}", r.ratio);
        assert_eq!(r.max_abs_error, 0.0);
    }

    #[test]
    fn deterministic_fields_and_zero_reps() {
        let values: Vec<f32> = (0..5000).map(|i| libm::sinf(i as f32 * 0.01)).collect();
        let reg = CodecRegistry::default();
        let clock = VirtualClock::new();
        let a = bench_codec(&reg, &values, &CodecSpec::cbt_rel(1e-3), 2, &clock).unwrap();
        let b = bench_codec(&reg, &values, &CodecSpec::cbt_rel(1e-3), 2, &clock).unwrap();
        assert_eq!((a.ratio, a.max_abs_error, a.mean_abs_error), (b.ratio, b.max_abs_error, b.mean_abs_error));
        assert!(a.max_abs_error <= a.eps_abs);
        assert!(bench_codec(&reg, &values, &CodecSpec::cbt_rel(1e-3), 0, &clock).is_err());
    }
}
