//! One-hidden-layer perceptron trained with Adam on mean absolute error.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpSpec {
    /// Hidden width; `None` means "same as the input width".
    pub hidden: Option<usize>,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            hidden: None,
            dropout: 0.2,
            epochs: 50,
            batch_size: 16,
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidHyperparameter(m));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.learning_rate >= 0.0) {
            return bad(format!("learning rate {} must be non-negative", self.learning_rate));
        }
        if self.hidden == Some(0) {
            return bad("hidden width must be positive".into());
        }
        Ok(())
    }
}

/// Parameters are stored flat as `[W1 (h x p, row-major) | b1 (h) | w2 (h) | b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    n_inputs: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn initialize(n_inputs: usize, spec: &MlpSpec, seed: u64) -> Self {
        let hidden = spec.hidden.unwrap_or(n_inputs).max(1);
        let mut rng = stream(seed, &[0]);
        let mut params = vec![0.0; hidden * n_inputs + 2 * hidden + 1];
        let lim1 = (6.0 / (n_inputs + hidden) as f64).sqrt();
        for w in &mut params[..hidden * n_inputs] {
            *w = rng.gen_range(-lim1..=lim1);
        }
        let lim2 = (6.0 / (hidden + 1) as f64).sqrt();
        let w2 = hidden * n_inputs + hidden;
        for w in &mut params[w2..w2 + hidden] {
            *w = rng.gen_range(-lim2..=lim2);
        }
        Self {
            n_inputs,
            hidden,
            params,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.n_inputs;
        (b1, b1 + self.hidden, b1 + 2 * self.hidden)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let p = self.n_inputs;
        let mut out = self.params[b2];
        for k in 0..self.hidden {
            let w = &self.params[k * p..(k + 1) * p];
            let z = self.params[b1 + k] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            if z > 0.0 {
                out += self.params[w2 + k] * z;
            }
        }
        out
    }

    /// Mean absolute error over `rows` and its gradient. `masks`, when given,
    /// holds one already-scaled dropout multiplier per (row, hidden unit).
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[f64], rows: &[usize], masks: Option<&[f64]>, grad: &mut [f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let (p, h) = (self.n_inputs, self.hidden);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / rows.len() as f64;
        let mut z = vec![0.0; h];
        let mut loss = 0.0;
        for (bi, &r) in rows.iter().enumerate() {
            let xr = x.row(r);
            let mut out = self.params[b2];
            for k in 0..h {
                let w = &self.params[k * p..(k + 1) * p];
                z[k] = self.params[b1 + k] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
                let m = masks.map_or(1.0, |m| m[bi * h + k]);
                if z[k] > 0.0 {
                    out += self.params[w2 + k] * z[k] * m;
                }
            }
            let err = out - y[r];
            loss += err.abs();
            // Subgradient of |.| at zero is taken as zero.
            let g = if err > 0.0 {
                scale
            } else if err < 0.0 {
                -scale
            } else {
                0.0
            };
            if g == 0.0 {
                continue;
            }
            grad[b2] += g;
            for k in 0..h {
                if z[k] <= 0.0 {
                    continue;
                }
                let m = masks.map_or(1.0, |m| m[bi * h + k]);
                grad[w2 + k] += g * z[k] * m;
                let gz = g * self.params[w2 + k] * m;
                grad[b1 + k] += gz;
                for (gw, xv) in grad[k * p..(k + 1) * p].iter_mut().zip(xr) {
                    *gw += gz * xv;
                }
            }
        }
        loss * scale
    }

    pub fn training_mae(&self, x: &Matrix, y: &[f64]) -> f64 {
        x.rows().zip(y).map(|(r, t)| (self.predict_row(r) - t).abs()).sum::<f64>() / y.len() as f64
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], spec: &MlpSpec) {
        self.t += 1;
        let c1 = 1.0 - spec.beta1.powi(self.t);
        let c2 = 1.0 - spec.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = spec.beta1 * self.m[i] + (1.0 - spec.beta1) * grad[i];
            self.v[i] = spec.beta2 * self.v[i] + (1.0 - spec.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= spec.learning_rate * m_hat / (v_hat.sqrt() + spec.adam_eps);
        }
    }
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else `1 / (1 - rate)`.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}

pub fn fit_mlp(x: &Matrix, y: &[f64], spec: &MlpSpec, seed: u64) -> Result<MlpModel> {
    fit_mlp_traced(x, y, spec, seed).map(|(m, _)| m)
}

/// Trains and also returns the dropout-free training MAE before the first
/// epoch and after each epoch (`epochs + 1` values).
pub fn fit_mlp_traced(x: &Matrix, y: &[f64], spec: &MlpSpec, seed: u64) -> Result<(MlpModel, Vec<f64>)> {
    spec.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(x.n_rows(), y.len()));
    }
    if y.is_empty() {
        return Err(Error::DegenerateData("MLP needs at least one row".into()));
    }
    let mut model = MlpModel::initialize(x.n_cols(), spec, seed);
    let mut rng = stream(seed, &[1]);
    let mut adam = Adam::new(model.params.len());
    let mut grad = vec![0.0; model.params.len()];
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut history = Vec::with_capacity(spec.epochs + 1);
    history.push(model.training_mae(x, y));
    for _ in 0..spec.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size) {
            let masks = (spec.dropout > 0.0).then(|| dropout_mask(batch.len() * model.hidden, spec.dropout, &mut rng));
            model.loss_and_gradient(x, y, batch, masks.as_deref(), &mut grad);
            adam.step(&mut model.params, &grad, spec);
        }
        history.push(model.training_mae(x, y));
    }
    Ok((model, history))
}
