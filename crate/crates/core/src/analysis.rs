//! Pointwise error distribution of a lossy reconstruction and its Laplace fit.

use alloc::vec::Vec;

use crate::stats::{mean, median};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDistribution {
    /// Signed errors `recon - orig`, in input order.
    pub samples: Vec<f64>,
    /// `bins + 1` ascending edges over a symmetric range.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Laplace location (sample median).
    pub laplace_mu: f64,
    /// Laplace scale (mean absolute deviation from the median).
    pub laplace_b: f64,
    /// Mean absolute gap between the empirical CDF and the fitted CDF.
    pub goodness: f64,
    pub eps_abs: Option<f64>,
}

pub fn laplace_cdf(x: f64, mu: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return if x < mu { 0.0 } else { 1.0 };
    }
    let z = (x - mu) / b;
    if z < 0.0 {
        0.5 * libm::exp(z)
    } else {
        1.0 - 0.5 * libm::exp(-z)
    }
}

/// Histograms `recon - orig` over `[-eps_abs, eps_abs]` (or the largest
/// observed magnitude when no bound is given) and fits a Laplace law by
/// maximum likelihood.
pub fn error_distribution(
    orig: &[f32],
    recon: &[f32],
    bins: usize,
    eps_abs: Option<f64>,
) -> Result<ErrorDistribution> {
    if orig.len() != recon.len() {
        return Err(Error::LengthMismatch { left: orig.len(), right: recon.len() });
    }
    if orig.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin"));
    }
    if eps_abs.is_some_and(|e| !(e.is_finite() && e > 0.0)) {
        return Err(Error::InvalidBound("histogram bound must be positive and finite"));
    }
    let samples: Vec<f64> = orig.iter().zip(recon).map(|(&o, &r)| f64::from(r) - f64::from(o)).collect();
    if samples.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFiniteInput);
    }

    let observed = samples.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let half = match eps_abs {
        Some(e) => e,
        None if observed > 0.0 => observed,
        None => 1.0,
    };
    let width = 2.0 * half / bins as f64;
    let mut bin_edges: Vec<f64> = (0..=bins).map(|i| -half + width * i as f64).collect();
    bin_edges[bins] = half;
    let mut counts = alloc::vec![0u64; bins];
    for &e in &samples {
        let i = libm::floor((e + half) / width);
        let i = if i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
        counts[i] += 1;
    }

    let laplace_mu = median(&samples);
    let laplace_b = mean(&samples.iter().map(|e| (e - laplace_mu).abs()).collect::<Vec<_>>());

    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let gap: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 0.5) / n - laplace_cdf(x, laplace_mu, laplace_b)).abs())
        .sum();

    Ok(ErrorDistribution {
        samples,
        bin_edges,
        counts,
        laplace_mu,
        laplace_b,
        goodness: gap / n,
        eps_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplace_sample(rng: &mut ChaCha8Rng, mu: f64, b: f64) -> f64 {
        let u: f64 = rng.random::<f64>() - 0.5;
        mu - b * u.signum() * libm::log(1.0 - 2.0 * u.abs())
    }

    #[test]
    fn identity_has_zero_scale() {
        let x = [1.0f32, -2.0, 3.5];
        let d = error_distribution(&x, &x, 11, None).unwrap();
        assert_eq!(d.laplace_b, 0.0);
        assert_eq!(d.counts.iter().sum::<u64>(), 3);
        assert_eq!(d.counts[5], 3);
    }

    #[test]
    fn recovers_laplace_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let orig = alloc::vec![0.0f32; n];
        let recon: Vec<f32> = (0..n).map(|_| laplace_sample(&mut rng, 0.0, 0.01) as f32).collect();
        let d = error_distribution(&orig, &recon, 101, None).unwrap();
        assert!((d.laplace_b - 0.01).abs() / 0.01 < 0.02, "b = {}", d.laplace_b);
        assert!(d.laplace_mu.abs() < 1e-3);
        assert!(d.goodness < 0.01);
    }

    #[test]
    fn uniform_fits_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let orig = alloc::vec![0.0f32; n];
        let lap: Vec<f32> = (0..n).map(|_| laplace_sample(&mut rng, 0.0, 0.01) as f32).collect();
        let uni: Vec<f32> = (0..n).map(|_| rng.random_range(-0.01f32..0.01)).collect();
        let a = error_distribution(&orig, &lap, 51, None).unwrap();
        let b = error_distribution(&orig, &uni, 51, Some(0.01)).unwrap();
        assert!(b.goodness > a.goodness);
        assert_eq!(b.bin_edges.len(), 52);
        assert_eq!(b.bin_edges[0], -0.01);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            error_distribution(&[1.0], &[1.0, 2.0], 10, None),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
        assert_eq!(error_distribution(&[], &[], 10, None), Err(Error::EmptyInput));
        assert!(error_distribution(&[1.0], &[1.0], 0, None).is_err());
    }
}
