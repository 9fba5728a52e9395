use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mnist::CLASSES;
use crate::error::{Error, Result};

pub const HIDDEN: [usize; 2] = [128, 64];

/// Fully connected `input -> 128 -> 64 -> 10` network with ReLU hidden
/// layers. Parameters are one flat vector: for each layer, a row-major
/// `out x in` weight matrix followed by `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    input_dim: usize,
    params: Vec<f64>,
}

/// Layer activations retained from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct Activations {
    /// Input followed by the post-ReLU hidden activations.
    layers: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

fn sizes(input_dim: usize) -> [usize; 4] {
    [input_dim, HIDDEN[0], HIDDEN[1], CLASSES]
}

impl Classifier {
    pub fn param_count(input_dim: usize) -> usize {
        sizes(input_dim).windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// He-uniform weights `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn new(input_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidParameter("classifier input must be non-empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Classifier::param_count(input_dim));
        for w in sizes(input_dim).windows(2) {
            let bound = (6.0 / w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Classifier { input_dim, params })
    }

    pub fn from_params(input_dim: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Classifier::param_count(input_dim);
        if params.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: params.len(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("classifier parameters"));
        }
        Ok(Classifier { input_dim, params })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.logits)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<Activations> {
        if x.len() != self.input_dim {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        let dims = sizes(self.input_dim);
        let mut layers = vec![x.to_vec()];
        let mut offset = 0;
        for l in 0..3 {
            let (n_in, n_out) = (dims[l], dims[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_out * (n_in + 1);
            let input = layers.last().expect("input layer is always present");
            let mut out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>()
                })
                .collect();
            if l < 2 {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
                layers.push(out);
            } else {
                return Ok(Activations { layers, logits: out });
            }
        }
        unreachable!("the network has three layers")
    }

    /// Backpropagates `dlogits`, accumulating parameter gradients into
    /// `dparams` and returning the gradient with respect to the input.
    pub fn backward(&self, acts: &Activations, dlogits: &[f64], dparams: &mut [f64]) -> Vec<f64> {
        let dims = sizes(self.input_dim);
        assert_eq!(dparams.len(), self.params.len());
        let mut offsets = [0usize; 3];
        for l in 1..3 {
            offsets[l] = offsets[l - 1] + dims[l] * (dims[l - 1] + 1);
        }
        let mut delta = dlogits.to_vec();
        for l in (0..3).rev() {
            let (n_in, n_out) = (dims[l], dims[l + 1]);
            let off = offsets[l];
            let input = &acts.layers[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut dparams[off + o * n_in..off + (o + 1) * n_in];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
                dparams[off + n_in * n_out + o] += d;
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, a) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *p += d * a;
                }
            }
            if l > 0 {
                // ReLU gate of the layer that produced `input`.
                for (p, v) in prev.iter_mut().zip(input) {
                    if *v <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }
}
