//! Two-layer rectifier network with softmax cross-entropy.
//!
//! State dict layout: `fc1.weight` (hidden × input), `fc1.bias` (hidden),
//! `fc2.weight` (classes × hidden), `fc2.bias` (classes), all `f32`.
//! Training math runs in `f64`; the state dict is rounded back to `f32`
//! once per [`local_train`] call.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::tensor::{flatten, StateDict, TensorRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TinyNetDims {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

const NAMES: [&str; 4] = ["fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"];

/// Network parameters in `f64`, also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub dims: TinyNetDims,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Params {
    pub fn zeros(dims: TinyNetDims) -> Self {
        Self {
            dims,
            w1: vec![0.0; dims.hidden * dims.input],
            b1: vec![0.0; dims.hidden],
            w2: vec![0.0; dims.classes * dims.hidden],
            b2: vec![0.0; dims.classes],
        }
    }

    fn tensors(&self) -> [&Vec<f64>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn locate(&self, mut i: usize) -> (usize, usize) {
        for (k, t) in self.tensors().iter().enumerate() {
            if i < t.len() {
                return (k, i);
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter at flat index `i` over (w1, b1, w2, b2).
    pub fn get(&self, i: usize) -> f64 {
        let (k, j) = self.locate(i);
        self.tensors()[k][j]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let (k, j) = self.locate(i);
        self.tensors_mut()[k][j] = v;
    }

    pub fn from_state(state: &StateDict) -> Result<Self> {
        let get = |name: &str| -> Result<(&TensorRecord, &[f32])> {
            let t = state
                .get(name)
                .ok_or_else(|| Error::StructureMismatch(alloc::format!("missing {name}")))?;
            Ok((t, flatten(t)?))
        };
        let (w1, w1v) = get(NAMES[0])?;
        let (_, b1v) = get(NAMES[1])?;
        let (w2, w2v) = get(NAMES[2])?;
        let (_, b2v) = get(NAMES[3])?;
        let (&[hidden, input], &[classes, h2]) = (w1.shape(), w2.shape()) else {
            return Err(Error::StructureMismatch("weights must be rank 2".to_string()));
        };
        if h2 != hidden || b1v.len() != hidden || b2v.len() != classes {
            return Err(Error::ShapeMismatch { name: "fc2.weight".into(), expected: hidden, found: h2 });
        }
        let up = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>();
        Ok(Self {
            dims: TinyNetDims { input, hidden, classes },
            w1: up(w1v),
            b1: up(b1v),
            w2: up(w2v),
            b2: up(b2v),
        })
    }

    pub fn to_state(&self) -> StateDict {
        let d = self.dims;
        let down = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        let shapes = [vec![d.hidden, d.input], vec![d.hidden], vec![d.classes, d.hidden], vec![d.classes]];
        StateDict::from_records(
            NAMES
                .iter()
                .zip(shapes)
                .zip(self.tensors())
                .map(|((n, s), t)| TensorRecord::f32(*n, s, down(t)).expect("shapes are consistent")),
        )
        .expect("names are unique")
    }
}

/// Uniform `±1/sqrt(fan_in)` initialization.
pub fn init_tinynet(dims: TinyNetDims, seed: u64) -> StateDict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Params::zeros(dims);
    let b1 = 1.0 / libm::sqrt(dims.input as f64);
    let b2 = 1.0 / libm::sqrt(dims.hidden as f64);
    for (t, bound) in p.tensors_mut().into_iter().zip([b1, b1, b2, b2]) {
        for v in t.iter_mut() {
            *v = f64::from(rng.random_range(-bound as f32..bound as f32));
        }
    }
    p.to_state()
}

fn forward(p: &Params, x: &[f32], hidden: &mut [f64], logits: &mut [f64]) {
    let d = p.dims;
    for (j, h) in hidden.iter_mut().enumerate() {
        let row = &p.w1[j * d.input..(j + 1) * d.input];
        let z: f64 = p.b1[j] + row.iter().zip(x).map(|(&w, &xi)| w * f64::from(xi)).sum::<f64>();
        *h = z;
    }
    for (c, l) in logits.iter_mut().enumerate() {
        let row = &p.w2[c * d.hidden..(c + 1) * d.hidden];
        *l = p.b2[c] + row.iter().zip(hidden.iter()).map(|(&w, &z)| w * z.max(0.0)).sum::<f64>();
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = libm::exp(*l - m);
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Mean cross-entropy over the batch and its gradient by backpropagation.
pub fn loss_and_grad(p: &Params, inputs: &[f32], labels: &[u32]) -> (f64, Params) {
    let d = p.dims;
    let n = labels.len();
    let mut g = Params::zeros(d);
    let mut z1 = vec![0.0; d.hidden];
    let mut probs = vec![0.0; d.classes];
    let mut dz1 = vec![0.0; d.hidden];
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let x = &inputs[i * d.input..(i + 1) * d.input];
        forward(p, x, &mut z1, &mut probs);
        softmax_in_place(&mut probs);
        loss -= libm::log(probs[y as usize].max(f64::MIN_POSITIVE));
        probs[y as usize] -= 1.0;
        dz1.iter_mut().for_each(|v| *v = 0.0);
        for (c, &dz2) in probs.iter().enumerate() {
            g.b2[c] += dz2;
            let w_row = &p.w2[c * d.hidden..(c + 1) * d.hidden];
            let g_row = &mut g.w2[c * d.hidden..(c + 1) * d.hidden];
            for j in 0..d.hidden {
                g_row[j] += dz2 * z1[j].max(0.0);
                dz1[j] += dz2 * w_row[j];
            }
        }
        for j in 0..d.hidden {
            if z1[j] <= 0.0 {
                continue;
            }
            g.b1[j] += dz1[j];
            let g_row = &mut g.w1[j * d.input..(j + 1) * d.input];
            for (gw, &xi) in g_row.iter_mut().zip(x) {
                *gw += dz1[j] * f64::from(xi);
            }
        }
    }
    let scale = 1.0 / n.max(1) as f64;
    for t in g.tensors_mut() {
        t.iter_mut().for_each(|v| *v *= scale);
    }
    (loss * scale, g)
}

/// Mini-batch SGD for `epochs` passes over `data`; batch order is drawn from `seed`.
pub fn local_train(
    model: &StateDict,
    data: &Dataset,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<StateDict> {
    let mut p = Params::from_state(model)?;
    if data.dim != p.dims.input {
        return Err(Error::ShapeMismatch { name: "inputs".into(), expected: p.dims.input, found: data.dim });
    }
    if batch_size == 0 || !lr.is_finite() || lr < 0.0 {
        return Err(Error::InvalidConfig("batch size must be positive and lr finite, non-negative"));
    }
    if lr == 0.0 || data.is_empty() {
        return Ok(model.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut xs = Vec::with_capacity(batch_size * data.dim);
    let mut ys = Vec::with_capacity(batch_size);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            xs.clear();
            ys.clear();
            for &i in chunk {
                xs.extend_from_slice(data.row(i));
                ys.push(data.labels[i]);
            }
            let (_, g) = loss_and_grad(&p, &xs, &ys);
            for (t, gt) in p.tensors_mut().into_iter().zip(g.tensors()) {
                t.iter_mut().zip(gt).for_each(|(w, &gw)| *w -= lr * gw);
            }
        }
    }
    Ok(p.to_state())
}

/// Top-1 accuracy; ties resolve to the lowest class index.
pub fn evaluate(model: &StateDict, data: &Dataset) -> Result<f64> {
    let p = Params::from_state(model)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut z1 = vec![0.0; p.dims.hidden];
    let mut logits = vec![0.0; p.dims.classes];
    let mut correct = 0usize;
    for i in 0..data.len() {
        forward(&p, data.row(i), &mut z1, &mut logits);
        let mut best = 0;
        for c in 1..logits.len() {
            if logits[c] > logits[best] {
                best = c;
            }
        }
        correct += usize::from(best as u32 == data.labels[i]);
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::super::{gen_task, SyntheticTask};
    use super::*;

    fn dims() -> TinyNetDims {
        TinyNetDims { input: 6, hidden: 8, classes: 3 }
    }

    #[test]
    fn state_round_trip_and_shapes() {
        let sd = init_tinynet(dims(), 1);
        assert_eq!(sd.names().collect::<Vec<_>>(), NAMES);
        assert_eq!(sd.get("fc1.weight").unwrap().shape(), &[8, 6]);
        let back = Params::from_state(&sd).unwrap().to_state();
        assert!(back.bit_eq(&sd));
        assert_eq!(Params::from_state(&sd).unwrap().len(), 8 * 6 + 8 + 3 * 8 + 3);
    }

    #[test]
    fn zero_lr_is_identity() {
        let task = SyntheticTask { input_dim: 6, num_classes: 3, ..SyntheticTask::default() };
        let data = gen_task(&task, 1).unwrap();
        let sd = init_tinynet(dims(), 2);
        let out = local_train(&sd, &data.clients[0], 3, 0.0, 16, 9).unwrap();
        assert!(out.bit_eq(&sd));
    }

    #[test]
    fn shape_mismatch_against_data() {
        let task = SyntheticTask { input_dim: 5, ..SyntheticTask::default() };
        let data = gen_task(&task, 1).unwrap();
        assert!(matches!(
            local_train(&init_tinynet(dims(), 2), &data.clients[0], 1, 0.1, 8, 0),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn single_sample_sgd_step_matches_finite_differences() {
        let sd = init_tinynet(dims(), 3);
        let p = Params::from_state(&sd).unwrap();
        let x: Vec<f32> = (0..6).map(|i| 0.3 * i as f32 - 0.7).collect();
        let y = [2u32];
        let (_, g) = loss_and_grad(&p, &x, &y);
        let h = 1e-3;
        for i in 0..p.len() {
            let mut plus = p.clone();
            plus.set(i, p.get(i) + h);
            let mut minus = p.clone();
            minus.set(i, p.get(i) - h);
            let fd = (loss_and_grad(&plus, &x, &y).0 - loss_and_grad(&minus, &x, &y).0) / (2.0 * h);
            let a = g.get(i);
            let denom = a.abs().max(fd.abs());
            if denom > 1e-7 {
                assert!((a - fd).abs() / denom < 1e-4, "coord {i}: {a} vs {fd}");
            }
        }
        // One SGD step on that sample moves parameters by exactly -lr * g (up to f32 rounding).
        let ds = Dataset { dim: 6, inputs: x.clone(), labels: y.to_vec() };
        let stepped = Params::from_state(&local_train(&sd, &ds, 1, 0.5, 1, 0).unwrap()).unwrap();
        for i in 0..p.len() {
            let expect = (p.get(i) - 0.5 * g.get(i)) as f32;
            assert_eq!(stepped.get(i) as f32, expect);
        }
    }

    #[test]
    fn training_loss_decreases_on_clean_task() {
        let task = SyntheticTask { noise_sigma: 0.0, ..SyntheticTask::default() };
        let data = gen_task(&task, 1).unwrap();
        let d = TinyNetDims { input: task.input_dim, hidden: 64, classes: task.num_classes };
        let ds = &data.clients[0];
        let mut state = init_tinynet(d, 4);
        let mut prev = loss_and_grad(&Params::from_state(&state).unwrap(), &ds.inputs, &ds.labels).0;
        for step in 0..8 {
            state = local_train(&state, ds, 1, 1e-2, ds.len(), step).unwrap();
            let loss = loss_and_grad(&Params::from_state(&state).unwrap(), &ds.inputs, &ds.labels).0;
            assert!(loss <= prev, "step {step}: {loss} > {prev}");
            prev = loss;
        }
    }

    #[test]
    fn single_class_is_trivially_accurate() {
        let task = SyntheticTask { num_classes: 1, input_dim: 6, ..SyntheticTask::default() };
        let data = gen_task(&task, 1).unwrap();
        let sd = init_tinynet(TinyNetDims { input: 6, hidden: 8, classes: 1 }, 0);
        assert_eq!(evaluate(&sd, &data.eval).unwrap(), 1.0);
    }
}
