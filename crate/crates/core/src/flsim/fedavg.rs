use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{StateDict, TensorData, TensorRecord};
use crate::{Error, Result};

/// Weighted elementwise mean of structurally identical state dicts. Weights
/// are normalized to sum to one; accumulation is in `f64` and integer
/// tensors are rounded to nearest.
pub fn fedavg_aggregate(states: &[StateDict], weights: &[f64]) -> Result<StateDict> {
    let first = states.first().ok_or(Error::InvalidConfig("no states to aggregate"))?;
    if states.len() != weights.len() {
        return Err(Error::LengthMismatch { left: states.len(), right: weights.len() });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidConfig("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConfig("weights must have a positive sum"));
    }
    for (i, s) in states.iter().enumerate().skip(1) {
        if !s.same_structure(first) {
            return Err(Error::StructureMismatch(format!("state {i} differs from state 0")));
        }
    }
    let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut out = StateDict::new();
    for (idx, t) in first.iter().enumerate() {
        let mut acc = vec![0.0f64; t.len()];
        for (s, &w) in states.iter().zip(&norm) {
            if w == 0.0 {
                continue;
            }
            let rec = s.iter().nth(idx).expect("same structure");
            match rec.data() {
                TensorData::F32(v) => acc.iter_mut().zip(v).for_each(|(a, &x)| *a += w * f64::from(x)),
                TensorData::F64(v) => acc.iter_mut().zip(v).for_each(|(a, &x)| *a += w * x),
                TensorData::I64(v) => acc.iter_mut().zip(v).for_each(|(a, &x)| *a += w * x as f64),
                TensorData::U8(v) => acc.iter_mut().zip(v).for_each(|(a, &x)| *a += w * f64::from(x)),
            }
        }
        let data = match t.data() {
            TensorData::F32(_) => TensorData::F32(acc.iter().map(|&a| a as f32).collect()),
            TensorData::F64(_) => TensorData::F64(acc),
            TensorData::I64(_) => TensorData::I64(acc.iter().map(|&a| libm::round(a) as i64).collect()),
            TensorData::U8(_) => TensorData::U8(acc.iter().map(|&a| libm::round(a) as u8).collect()),
        };
        out.insert(TensorRecord::new(t.name(), t.shape().to_vec(), data)?)?;
    }
    Ok(out)
}
