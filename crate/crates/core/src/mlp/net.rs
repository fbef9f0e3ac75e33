//! Flat-parameter dense network used for training.
//!
//! Parameters live in one contiguous f64 vector laid out as
//! `[W1 row-major, b1, W2, b2, ...]`, which keeps the Adam state and
//! finite-difference probing trivial. Hidden layers are ReLU; the output
//! layer is linear, with softmax and the cross-entropy loss fused through
//! log-sum-exp.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Numerically stable softmax over a logit slice.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

/// log(sum(exp(z))) without overflow.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone)]
pub struct DenseNet {
    /// Layer widths `[n_features, hidden..., n_classes]`.
    pub dims: Vec<usize>,
    /// Flat parameter vector.
    pub params: Vec<f64>,
}

impl DenseNet {
    pub fn param_count(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Glorot-uniform weights (limit sqrt(6 / (in + out))), zero biases,
    /// drawn from a seeded generator in layer order.
    pub fn glorot(dims: Vec<usize>, seed: u64) -> DenseNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0f64; Self::param_count(&dims)];
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in params[offset..offset + fan_out * fan_in].iter_mut() {
                *p = (rng.gen::<f64>() * 2.0 - 1.0) * limit;
            }
            offset += fan_out * fan_in + fan_out; // biases stay zero
        }
        DenseNet { dims, params }
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// (weight offset, bias offset) of layer `l`.
    fn offsets(&self, layer: usize) -> (usize, usize) {
        let mut offset = 0;
        for l in 0..layer {
            offset += self.dims[l + 1] * self.dims[l] + self.dims[l + 1];
        }
        (offset, offset + self.dims[layer + 1] * self.dims[layer])
    }

    /// Forward pass returning the output logits.
    #[allow(clippy::needless_range_loop)]
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dims[0]);
        let mut act = x.to_vec();
        for l in 0..self.n_layers() {
            act = self.layer_forward(l, &act, l + 1 < self.n_layers());
        }
        act
    }

    #[allow(clippy::needless_range_loop)]
    fn layer_forward(&self, layer: usize, input: &[f64], relu: bool) -> Vec<f64> {
        let (in_dim, out_dim) = (self.dims[layer], self.dims[layer + 1]);
        let (wo, bo) = self.offsets(layer);
        let mut out = vec![0f64; out_dim];
        for o in 0..out_dim {
            let row = &self.params[wo + o * in_dim..wo + (o + 1) * in_dim];
            let mut z = self.params[bo + o];
            for (w, a) in row.iter().zip(input) {
                z += w * a;
            }
            out[o] = if relu { z.max(0.0) } else { z };
        }
        out
    }

    /// Mean sparse categorical cross-entropy over `(rows, labels)`.
    pub fn loss(&self, xs: &[f64], ys: &[u8]) -> f64 {
        let n_in = self.dims[0];
        let mut total = 0.0;
        for (row, &y) in xs.chunks_exact(n_in).zip(ys) {
            let logits = self.forward(row);
            total += log_sum_exp(&logits) - logits[y as usize];
        }
        total / ys.len() as f64
    }

    /// Mean loss and its gradient with respect to every parameter.
    #[allow(clippy::needless_range_loop)]
    pub fn loss_and_grad(&self, xs: &[f64], ys: &[u8]) -> (f64, Vec<f64>) {
        let n_in = self.dims[0];
        let n_layers = self.n_layers();
        let batch = ys.len() as f64;
        let mut grad = vec![0f64; self.params.len()];
        let mut total_loss = 0.0;

        for (row, &y) in xs.chunks_exact(n_in).zip(ys) {
            // Forward, keeping every activation.
            let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
            acts.push(row.to_vec());
            for l in 0..n_layers {
                let next = self.layer_forward(l, &acts[l], l + 1 < n_layers);
                acts.push(next);
            }
            let logits = &acts[n_layers];
            total_loss += log_sum_exp(logits) - logits[y as usize];

            // d(loss)/d(logits) = softmax - onehot.
            let mut dz = softmax(logits);
            dz[y as usize] -= 1.0;

            for l in (0..n_layers).rev() {
                let (in_dim, out_dim) = (self.dims[l], self.dims[l + 1]);
                let (wo, bo) = self.offsets(l);
                let input = &acts[l];
                for o in 0..out_dim {
                    let g = dz[o];
                    let grow = &mut grad[wo + o * in_dim..wo + (o + 1) * in_dim];
                    for (gw, a) in grow.iter_mut().zip(input) {
                        *gw += g * a;
                    }
                    grad[bo + o] += g;
                }
                if l > 0 {
                    // Propagate through the ReLU of the previous layer:
                    // its output is acts[l], zero output means zero slope.
                    let mut prev = vec![0f64; in_dim];
                    for o in 0..out_dim {
                        let row_w = &self.params[wo + o * in_dim..wo + (o + 1) * in_dim];
                        let g = dz[o];
                        for (p, w) in prev.iter_mut().zip(row_w) {
                            *p += g * w;
                        }
                    }
                    for (p, &a) in prev.iter_mut().zip(input.iter()) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    dz = prev;
                }
            }
        }

        for g in grad.iter_mut() {
            *g /= batch;
        }
        (total_loss / batch, grad)
    }
}
