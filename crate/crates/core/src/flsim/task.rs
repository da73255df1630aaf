use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Gaussian-blob classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub seed: u64,
    pub num_classes: usize,
    pub input_dim: usize,
    /// Standard deviation of each center's coordinates.
    pub center_scale: f64,
    pub noise_sigma: f64,
    pub samples_per_client: usize,
    pub eval_samples: usize,
    pub partitioning: Partitioning,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            seed: 7,
            num_classes: 20,
            input_dim: 32,
            center_scale: 1.0,
            noise_sigma: 2.0,
            samples_per_client: 1024,
            eval_samples: 2000,
            partitioning: Partitioning::Iid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Partitioning {
    #[default]
    Iid,
    /// Training pool sorted by label before splitting, so each client sees a
    /// contiguous label range.
    ByLabel,
}

/// Row-major inputs (`len × dim`) and labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub dim: usize,
    pub inputs: Vec<f32>,
    pub labels: Vec<u32>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    fn push(&mut self, x: &[f32], y: u32) {
        self.inputs.extend_from_slice(x);
        self.labels.push(y);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub centers: Vec<f64>,
    pub clients: Vec<Dataset>,
    pub eval: Dataset,
}

fn sample(rng: &mut ChaCha8Rng, centers: &[f64], task: &SyntheticTask, n: usize) -> Dataset {
    let d = task.input_dim;
    let noise = Normal::new(0.0, task.noise_sigma.max(0.0)).expect("sigma is finite");
    let mut ds = Dataset { dim: d, ..Dataset::default() };
    let mut x = alloc::vec![0f32; d];
    for i in 0..n {
        let y = if task.num_classes == 1 { 0 } else { (i % task.num_classes) as u32 };
        let c = &centers[y as usize * d..(y as usize + 1) * d];
        for (xj, &cj) in x.iter_mut().zip(c) {
            let e = if task.noise_sigma > 0.0 { noise.sample(rng) } else { 0.0 };
            *xj = (cj + e) as f32;
        }
        ds.push(&x, y);
    }
    ds
}

fn shuffled(ds: Dataset, rng: &mut ChaCha8Rng) -> Dataset {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(rng);
    let mut out = Dataset { dim: ds.dim, ..Dataset::default() };
    for i in order {
        out.push(ds.row(i), ds.labels[i]);
    }
    out
}

/// Generates per-client training sets and a held-out evaluation set.
pub fn gen_task(task: &SyntheticTask, clients: usize) -> Result<TaskData> {
    if task.num_classes == 0 || task.input_dim == 0 || clients == 0 {
        return Err(Error::InvalidConfig("task needs classes, input dims and clients"));
    }
    if !(task.noise_sigma >= 0.0 && task.noise_sigma.is_finite() && task.center_scale > 0.0) {
        return Err(Error::InvalidConfig("noise sigma and center scale must be finite, non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let d = task.input_dim;
    let k = task.num_classes;
    let scale = Normal::new(0.0, task.center_scale).expect("scale is finite");
    let centers = loop {
        let c: Vec<f64> = (0..k * d).map(|_| scale.sample(&mut rng)).collect();
        let distinct = (0..k).all(|a| (a + 1..k).all(|b| c[a * d..(a + 1) * d] != c[b * d..(b + 1) * d]));
        if distinct {
            break c;
        }
    };

    let pool = sample(&mut rng, &centers, task, clients * task.samples_per_client);
    let mut pool = shuffled(pool, &mut rng);
    if task.partitioning == Partitioning::ByLabel {
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by_key(|&i| pool.labels[i]);
        let mut sorted = Dataset { dim: d, ..Dataset::default() };
        for i in order {
            sorted.push(pool.row(i), pool.labels[i]);
        }
        pool = sorted;
    }
    let per = task.samples_per_client;
    let parts = (0..clients)
        .map(|c| Dataset {
            dim: d,
            inputs: pool.inputs[c * per * d..(c + 1) * per * d].to_vec(),
            labels: pool.labels[c * per..(c + 1) * per].to_vec(),
        })
        .collect();
    let eval_seed = rng.random::<u64>();
    let eval = sample(&mut ChaCha8Rng::seed_from_u64(eval_seed), &centers, task, task.eval_samples);
    Ok(TaskData { centers, clients: parts, eval })
}
