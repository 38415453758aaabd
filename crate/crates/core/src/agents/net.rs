//! Fully connected networks with hand-written backprop, and Adam.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Multilayer perceptron. Parameters are stored flat, layer by layer, as the
/// row-major `out × in` weight matrix followed by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Activations recorded by [`DenseNet::forward_trace`] for backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `values[0]` is the input; `values[i]` the output of layer `i`.
    values: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl DenseNet {
    /// Uniform fan-in initialisation; the last layer is drawn from a narrow
    /// `±final_scale` band so fresh outputs sit near zero.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(
                "hidden",
                "network needs >= 2 non-empty layers",
            ));
        }
        let mut params = Vec::with_capacity(Self::count(sizes));
        let layers = sizes.len() - 1;
        for (i, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if i + 1 == layers {
                final_scale
            } else {
                1.0 / libm::sqrt(fan_in as f64)
            };
            for _ in 0..fan_in * fan_out + fan_out {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params,
        })
    }

    /// Builds a net from explicit parameters.
    pub fn from_params(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        params: Vec<f64>,
    ) -> Result<Self> {
        if sizes.len() < 2 || params.len() != Self::count(sizes) {
            return Err(Error::shape(alloc::format!(
                "{} parameters for layer sizes {:?}",
                params.len(),
                sizes
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params,
        })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.sizes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(alloc::format!(
                "input of length {} for a {}-input net",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut offset = 0;
        for layer in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let act = self.activation(layer);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            cur = (0..n_out)
                .map(|o| act.apply(dot(&w[o * n_in..(o + 1) * n_in], &cur) + b[o]))
                .collect();
            offset += n_in * n_out + n_out;
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut values = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.sizes.len() - 1);
        let mut offset = 0;
        for layer in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let act = self.activation(layer);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &values[layer];
            let z: Vec<f64> = (0..n_out)
                .map(|o| dot(&w[o * n_in..(o + 1) * n_in], input) + b[o])
                .collect();
            values.push(z.iter().map(|&v| act.apply(v)).collect());
            pre.push(z);
            offset += n_in * n_out + n_out;
        }
        Ok(Trace { values, pre })
    }

    /// Backpropagates `grad_out = ∂loss/∂output` through a recorded trace,
    /// accumulating parameter gradients into `grads` and returning
    /// `∂loss/∂input`.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if grad_out.len() != self.output_dim() || grads.len() != self.params.len() {
            return Err(Error::shape("gradient buffers do not match the network"));
        }
        let mut offsets = Vec::with_capacity(self.sizes.len() - 1);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        let mut delta = grad_out.to_vec();
        for layer in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let act = self.activation(layer);
            let z = &trace.pre[layer];
            let y = &trace.values[layer + 1];
            for o in 0..n_out {
                delta[o] *= act.derivative(z[o], y[o]);
            }
            let off = offsets[layer];
            let input = &trace.values[layer];
            let (gw, gb) = grads[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let w = &self.params[off..off + n_in * n_out];
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * n_in..(o + 1) * n_in];
                for (g, &x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                for (n, &wv) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *n += d * wv;
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// One-shot forward and backward pass: returns the output and the
    /// parameter gradient for the given `∂loss/∂output`.
    pub fn forward_backward(&self, x: &[f64], loss_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let trace = self.forward_trace(x)?;
        let mut grads = vec![0.0; self.params.len()];
        self.backward(&trace, loss_grad, &mut grads)?;
        Ok((trace.output().to_vec(), grads))
    }

    /// `θ' ← ϱ θ + (1 − ϱ) θ'`, with `self` as the target.
    pub fn soft_update_from(&mut self, main: &DenseNet, rho: f64) {
        for (t, &m) in self.params.iter_mut().zip(&main.params) {
            *t = rho * m + (1.0 - rho) * *t;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; params],
            v: vec![0.0; params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Descends along `grads` (gradient of a loss to minimise).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Welford running mean and variance for observation scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, m2), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.count;
            *m2 += d * (v - *m);
        }
    }

    /// Standardised and clipped to `±10`; identity until two samples are seen.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        if self.count < 2.0 {
            return x.to_vec();
        }
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let var = self.m2[i] / (self.count - 1.0);
                ((v - self.mean[i]) / libm::sqrt(var + 1e-8)).clamp(-10.0, 10.0)
            })
            .collect()
    }
}
