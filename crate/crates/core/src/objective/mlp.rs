//! Dense feed-forward classifier with softmax cross-entropy loss.
//!
//! Parameters are laid out layer by layer: the `out x in` weight matrix in
//! row-major order, then the `out` biases.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::objective::{Batch, Dataset};
use crate::rng::standard_normal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a` and input `z`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpClassifier {
    layer_sizes: Vec<usize>,
    activation: Activation,
    dataset: Arc<Dataset>,
}

impl MlpClassifier {
    /// `layer_sizes` runs from the input dimension to the class count.
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, dataset: Arc<Dataset>) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(GsamError::Config(
                "MLP needs at least an input and an output layer, all of positive width".into(),
            ));
        }
        if layer_sizes[0] != dataset.feature_dim() {
            return Err(GsamError::Config(format!(
                "MLP input width {} does not match dataset feature dimension {}",
                layer_sizes[0],
                dataset.feature_dim()
            )));
        }
        if *layer_sizes.last().unwrap() != dataset.classes() {
            return Err(GsamError::Config(format!(
                "MLP output width {} does not match dataset class count {}",
                layer_sizes.last().unwrap(),
                dataset.classes()
            )));
        }
        Ok(MlpClassifier {
            layer_sizes,
            activation,
            dataset,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    /// Scaled LeCun-normal weights, zero biases.
    pub fn init_params(&self, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.num_params());
        for p in self.layer_sizes.windows(2) {
            let std = scale / (p[0] as f64).sqrt();
            for _ in 0..p[0] * p[1] {
                w.push(std * standard_normal(rng));
            }
            w.extend(std::iter::repeat_n(0.0, p[1]));
        }
        w
    }

    fn sample_indices<'a>(&self, batch: &'a Batch) -> Result<std::borrow::Cow<'a, [usize]>> {
        if batch.is_full() {
            return Ok((0..self.dataset.len()).collect::<Vec<_>>().into());
        }
        if let Some(&bad) = batch.indices().iter().find(|&&i| i >= self.dataset.len()) {
            return Err(GsamError::Argument(format!(
                "batch index {bad} out of range for dataset of {} samples",
                self.dataset.len()
            )));
        }
        Ok(batch.indices().into())
    }

    /// Forward pass for one input; returns pre-activations and activations
    /// per layer (the last activation entry is the logits).
    fn forward(&self, w: &[f64], x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n_layers = self.layer_sizes.len() - 1;
        let mut zs = Vec::with_capacity(n_layers);
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        let mut offset = 0;
        for (l, p) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (p[0], p[1]);
            let weights = &w[offset..offset + n_in * n_out];
            let biases = &w[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let input = &acts[l];
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    row.iter().zip(input).fold(biases[o], |acc, (a, b)| acc + a * b)
                })
                .collect();
            let a = if l + 1 < n_layers {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    pub fn logits(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        self.forward(w, x).1.pop().unwrap()
    }

    /// Mean cross-entropy over the batch, and its gradient when requested.
    pub fn loss_and_grad(&self, w: &[f64], batch: &Batch, want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        let idx = self.sample_indices(batch)?;
        if idx.is_empty() {
            return Err(GsamError::Argument("empty minibatch".into()));
        }
        let mut grad = want_grad.then(|| vec![0.0; w.len()]);
        let mut total = 0.0;
        for &i in idx.iter() {
            let (zs, acts) = self.forward(w, self.dataset.row(i));
            let logits = acts.last().unwrap();
            let y = self.dataset.label(i);
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = logits.iter().map(|z| (z - m).exp()).sum();
            let lse = m + sum_exp.ln();
            total += lse - logits[y];
            if let Some(g) = grad.as_mut() {
                let mut delta: Vec<f64> = logits.iter().map(|z| (z - lse).exp()).collect();
                delta[y] -= 1.0;
                self.backward(w, &zs, &acts, delta, g);
            }
        }
        let scale = 1.0 / idx.len() as f64;
        let loss = total * scale;
        if let Some(g) = grad.as_mut() {
            g.iter_mut().for_each(|x| *x *= scale);
        }
        Ok((loss, grad))
    }

    fn backward(&self, w: &[f64], zs: &[Vec<f64>], acts: &[Vec<f64>], mut delta: Vec<f64>, grad: &mut [f64]) {
        let offsets: Vec<usize> = self
            .layer_sizes
            .windows(2)
            .scan(0, |off, p| {
                let start = *off;
                *off += p[0] * p[1] + p[1];
                Some(start)
            })
            .collect();
        for l in (0..self.layer_sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for o in 0..n_out {
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += delta[o] * a;
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l > 0 {
                let weights = &w[off..off + n_in * n_out];
                let mut next = vec![0.0; n_in];
                for o in 0..n_out {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    for (nx, wv) in next.iter_mut().zip(row) {
                        *nx += wv * delta[o];
                    }
                }
                for (j, nx) in next.iter_mut().enumerate() {
                    *nx *= self.activation.derivative(zs[l - 1][j], acts[l][j]);
                }
                delta = next;
            }
        }
    }

    pub fn predict(&self, w: &[f64], x: &[f64]) -> usize {
        let logits = self.logits(w, x);
        let mut best = 0;
        for (k, z) in logits.iter().enumerate() {
            if *z > logits[best] {
                best = k;
            }
        }
        best
    }

    /// Fraction of correctly classified samples of `data` (which must share
    /// this model's feature and class dimensions).
    pub fn accuracy(&self, w: &[f64], data: &Dataset) -> f64 {
        let correct = (0..data.len()).filter(|&i| self.predict(w, data.row(i)) == data.label(i)).count();
        correct as f64 / data.len() as f64
    }
}
