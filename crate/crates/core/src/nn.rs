//! A small dense ReLU network with hand-written backpropagation and Adam.
//!
//! Parameters live in one flat vector (per layer: weights row-major
//! `out x in`, then biases) so that the optimizer state and finite-difference
//! checks can treat them uniformly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. Hidden layers use ReLU, the
    /// output layer is linear.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut mlp = Mlp::zeros(sizes);
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w_off, _) = mlp.layer_offsets(l);
            for w in &mut mlp.params[w_off..w_off + fan_in * fan_out] {
                *w = rng.random_range(-limit..=limit);
            }
        }
        mlp
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs an input and an output size");
        let n: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp { sizes: sizes.to_vec(), params: vec![0.0; n] }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// (weight offset, bias offset) of layer `l`.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        (off, off + self.sizes[l] * self.sizes[l + 1])
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), actual: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.forward_all(x);
        Ok(acts.into_iter().last().expect("at least the input"))
    }

    /// Activations of every layer, input included. Hidden entries are
    /// post-ReLU.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let input = &acts[l];
            let mut out = self.params[b_off..b_off + n_out].to_vec();
            for (o, out_o) in out.iter_mut().enumerate() {
                let row = &self.params[w_off + o * n_in..w_off + (o + 1) * n_in];
                *out_o += row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            }
            if l + 1 < n_layers {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    /// Backpropagates `grad_out` (dL/d output) for input `x` and adds the
    /// parameter gradient into `grads`. Returns dL/d input.
    pub fn accumulate_grad(&self, x: &[f64], grad_out: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        if grad_out.len() != self.output_dim() {
            return Err(Error::ShapeMismatch { expected: self.output_dim(), actual: grad_out.len() });
        }
        let acts = self.forward_all(x);
        let n_layers = self.sizes.len() - 1;
        let mut delta = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let input = &acts[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grads[b_off + o] += d;
                let g_row = &mut grads[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (g, x) in g_row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &self.params[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            if l > 0 {
                // ReLU derivative on the hidden activation feeding this layer
                for (p, a) in prev.iter_mut().zip(&acts[l]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(delta)
    }
}

/// Adam optimizer state for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
