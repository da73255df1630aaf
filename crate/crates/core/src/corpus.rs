//! Synthetic inputs for codec tests and benchmarks.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::flsim::{FLConfig, Simulation};
use crate::netsim::VirtualClock;
use crate::tensor::StateDict;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    /// One repeated value.
    Constant,
    /// Sum of a few low-frequency sinusoids plus a ramp.
    Smooth,
    /// Gaussian values with rare large spikes, like trained weights.
    Spiky,
    /// Gaussian segments whose scales span twelve orders of magnitude.
    MixedScale,
}

impl ArrayKind {
    pub const ALL: [ArrayKind; 4] = [ArrayKind::Constant, ArrayKind::Smooth, ArrayKind::Spiky, ArrayKind::MixedScale];
}

pub fn synthetic_array(kind: ArrayKind, len: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, 1.0).expect("unit normal");
    match kind {
        ArrayKind::Constant => {
            let c = normal.sample(&mut rng) * libm::pow(10.0, rng.random_range(-3.0..3.0));
            alloc::vec![c as f32; len]
        }
        ArrayKind::Smooth => {
            let waves: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.random_range(0.1..2.0), rng.random_range(1e-3..5e-2), rng.random_range(0.0..6.3)))
                .collect();
            let slope = normal.sample(&mut rng) / len.max(1) as f64;
            (0..len)
                .map(|i| {
                    let t = i as f64;
                    let v: f64 = waves.iter().map(|&(a, w, p)| a * libm::sin(w * t + p)).sum();
                    (v + slope * t) as f32
                })
                .collect()
        }
        ArrayKind::Spiky => {
            let sigma = libm::pow(10.0, rng.random_range(-3.0..0.0));
            (0..len)
                .map(|_| {
                    let v = normal.sample(&mut rng) * sigma;
                    let v = if rng.random_bool(0.01) { v * 100.0 } else { v };
                    v as f32
                })
                .collect()
        }
        ArrayKind::MixedScale => {
            let mut out = Vec::with_capacity(len);
            while out.len() < len {
                let seg = rng.random_range(1..=64).min(len - out.len());
                let scale = libm::pow(10.0, rng.random_range(-6.0..6.0));
                out.extend((0..seg).map(|_| (normal.sample(&mut rng) * scale) as f32));
            }
            out
        }
    }
}

/// The initial global model and the one after each round of an uncompressed
/// FedAvg run of `cfg`.
pub fn tinynet_corpus(cfg: &FLConfig) -> Result<Vec<StateDict>> {
    let sim = Simulation::new(FLConfig { codec: None, ..cfg.clone() })?;
    let clock = VirtualClock::new();
    let mut states = Vec::with_capacity(cfg.rounds + 1);
    states.push(sim.initial_state());
    for r in 0..cfg.rounds {
        let (next, _) = sim.run_round(states.last().expect("non-empty"), r, &clock)?;
        states.push(next);
    }
    Ok(states)
}
