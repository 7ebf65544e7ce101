//! Feedforward network with hidden blocks `tanh(x W1 + b1) W2 + b2` and a
//! single linear output unit through a sigmoid.
//!
//! A block maps `d_in -> d_out` with `W1: d_in x d_out` and
//! `W2: d_out x d_out`. Parameters live in one flat vector so the optimizer
//! and gradient checks can treat them uniformly.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, validate, TrainingExample};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnParams {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub val_fraction: f64,
    pub batch_size: usize,
}

impl Default for FnnParams {
    fn default() -> Self {
        FnnParams {
            hidden: vec![90, 60, 30],
            lr: 5e-4,
            weight_decay: 1e-5,
            epochs: 500,
            val_fraction: 0.2,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// `[input, hidden..., 1]`.
    pub dims: Vec<usize>,
    pub params: Vec<f64>,
}

/// Offsets of one block's tensors in the flat parameter vector.
struct BlockLayout {
    d_in: usize,
    d_out: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Network {
    pub fn param_count(dims: &[usize]) -> usize {
        let hidden: usize = dims.windows(2).take(dims.len() - 2).map(|w| w[0] * w[1] + w[1] + w[1] * w[1] + w[1]).sum();
        hidden + dims[dims.len() - 2] + 1
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || *dims.last().unwrap() != 1 || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid network dims {dims:?}")));
        }
        Ok(Network {
            dims: dims.to_vec(),
            params: vec![0.0; Self::param_count(dims)],
        })
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` for every weight and bias.
    pub fn random(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let mut fans = Vec::with_capacity(net.params.len());
        for b in net.layout() {
            fans.extend(std::iter::repeat_n(b.d_in, b.d_in * b.d_out + b.d_out));
            fans.extend(std::iter::repeat_n(b.d_out, b.d_out * b.d_out + b.d_out));
        }
        let last = dims[dims.len() - 2];
        fans.extend(std::iter::repeat_n(last, last + 1));
        for (p, fan) in net.params.iter_mut().zip(fans) {
            let bound = 1.0 / (fan as f64).sqrt();
            *p = rng.random_range(-bound..bound);
        }
        Ok(net)
    }

    fn layout(&self) -> Vec<BlockLayout> {
        let mut off = 0;
        let mut out = Vec::new();
        for w in self.dims.windows(2).take(self.dims.len() - 2) {
            let (d_in, d_out) = (w[0], w[1]);
            let w1 = off;
            let b1 = w1 + d_in * d_out;
            let w2 = b1 + d_out;
            let b2 = w2 + d_out * d_out;
            off = b2 + d_out;
            out.push(BlockLayout {
                d_in,
                d_out,
                w1,
                b1,
                w2,
                b2,
            });
        }
        out
    }

    fn head_offset(&self) -> usize {
        self.params.len() - self.dims[self.dims.len() - 2] - 1
    }

    /// Output logit for one input.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut h = x.to_vec();
        let mut a = Vec::new();
        for b in self.layout() {
            block_forward(&self.params, &b, &h, &mut a);
            h = a.iter().map(|_| 0.0).collect();
            affine(&self.params[b.w2..], &self.params[b.b2..b.b2 + b.d_out], &a, &mut h);
        }
        let ho = self.head_offset();
        let last = h.len();
        h.iter().zip(&self.params[ho..ho + last]).map(|(x, w)| x * w).sum::<f64>() + self.params[ho + last]
    }

    /// Weighted mean binary cross-entropy over the batch and its gradient
    /// with respect to `params`.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64], ws: &[f64]) -> (f64, Vec<f64>) {
        let layout = self.layout();
        let ho = self.head_offset();
        let mut grad = vec![0.0; self.params.len()];
        let wsum: f64 = ws.iter().sum();
        let mut loss = 0.0;
        // Per block: block input and tanh activations.
        let mut inputs: Vec<Vec<f64>> = vec![Vec::new(); layout.len()];
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); layout.len()];
        for ((x, &y), &w) in xs.iter().zip(ys).zip(ws) {
            let mut h = x.to_vec();
            for (k, b) in layout.iter().enumerate() {
                let mut a = Vec::new();
                block_forward(&self.params, b, &h, &mut a);
                let mut out = vec![0.0; b.d_out];
                affine(&self.params[b.w2..], &self.params[b.b2..b.b2 + b.d_out], &a, &mut out);
                inputs[k] = std::mem::replace(&mut h, out);
                acts[k] = a;
            }
            let last = h.len();
            let z = h.iter().zip(&self.params[ho..ho + last]).map(|(x, w)| x * w).sum::<f64>() + self.params[ho + last];
            loss += w * (softplus(z) - y * z);
            let dz = w * (sigmoid(z) - y) / wsum;
            for (g, hv) in grad[ho..ho + last].iter_mut().zip(&h) {
                *g += dz * hv;
            }
            grad[ho + last] += dz;
            let mut dh: Vec<f64> = self.params[ho..ho + last].iter().map(|w| w * dz).collect();
            for (k, b) in layout.iter().enumerate().rev() {
                let a = &acts[k];
                let x = &inputs[k];
                // y = a W2 + b2
                let mut da = vec![0.0; b.d_out];
                for i in 0..b.d_out {
                    let row = b.w2 + i * b.d_out;
                    let ai = a[i];
                    let mut s = 0.0;
                    for j in 0..b.d_out {
                        grad[row + j] += ai * dh[j];
                        s += self.params[row + j] * dh[j];
                    }
                    da[i] = s;
                }
                for j in 0..b.d_out {
                    grad[b.b2 + j] += dh[j];
                }
                // a = tanh(x W1 + b1)
                let dzb: Vec<f64> = da.iter().zip(a).map(|(d, a)| d * (1.0 - a * a)).collect();
                let mut dx = vec![0.0; b.d_in];
                for i in 0..b.d_in {
                    let row = b.w1 + i * b.d_out;
                    let xi = x[i];
                    let mut s = 0.0;
                    for j in 0..b.d_out {
                        grad[row + j] += xi * dzb[j];
                        s += self.params[row + j] * dzb[j];
                    }
                    dx[i] = s;
                }
                for j in 0..b.d_out {
                    grad[b.b1 + j] += dzb[j];
                }
                dh = dx;
            }
        }
        (loss / wsum, grad)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `out = x W + b` with `W` row-major `x.len() x b.len()`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    out.copy_from_slice(b);
    let d_out = b.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(&w[i * d_out..(i + 1) * d_out]) {
            *o += xi * wv;
        }
    }
}

fn block_forward(params: &[f64], b: &BlockLayout, x: &[f64], a: &mut Vec<f64>) {
    a.clear();
    a.resize(b.d_out, 0.0);
    affine(&params[b.w1..], &params[b.b1..b.b1 + b.d_out], x, a);
    a.iter_mut().for_each(|v| *v = v.tanh());
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnModel {
    pub network: Network,
    /// Input standardization fitted on the training portion.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub params: FnnParams,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_f1: f64,
}

impl FnnModel {
    pub fn n_features(&self) -> usize {
        self.network.dims[0]
    }

    /// A model with all-zero weights and identity standardization.
    pub fn zeros(n_features: usize, hidden: &[usize]) -> Result<Self> {
        let mut dims = vec![n_features];
        dims.extend_from_slice(hidden);
        dims.push(1);
        Ok(FnnModel {
            network: Network::zeros(&dims)?,
            mean: vec![0.0; n_features],
            scale: vec![1.0; n_features],
            params: FnnParams {
                hidden: hidden.to_vec(),
                ..Default::default()
            },
            seed: 0,
            best_epoch: 0,
            best_val_f1: 0.0,
        })
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(sigmoid(self.network.logit(&self.standardize(x)).clamp(-20.0, 20.0)))
    }
}

/// Binary F1 of `predicted >= 0.5` against labels; 0 when undefined.
fn f1(pred: &[bool], gold: &[bool]) -> f64 {
    let tp = pred.iter().zip(gold).filter(|(p, g)| **p && **g).count() as f64;
    let fp = pred.iter().zip(gold).filter(|(p, g)| **p && !**g).count() as f64;
    let fneg = pred.iter().zip(gold).filter(|(p, g)| !**p && **g).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    }
}

/// Trains with Adam on binary cross-entropy. The validation split is
/// stratified and drawn with `split_seed`; initialization and batch order
/// use `seed`. The snapshot with the best validation F1 is kept, earliest
/// epoch on ties.
pub fn train_fnn(examples: &[TrainingExample], params: &FnnParams, split_seed: u64, seed: u64) -> Result<FnnModel> {
    let d = validate(examples, 10)?;
    if params.batch_size == 0 || !(0.0..1.0).contains(&params.val_fraction) {
        return Err(Error::invalid("batch_size must be positive and val_fraction in [0, 1)"));
    }
    let mut split_rng = seed::rng(split_seed);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].label == class).collect();
        idx.shuffle(&mut split_rng);
        let n_val = (idx.len() as f64 * params.val_fraction).round() as usize;
        let n_val = n_val.min(idx.len() - 1);
        val_idx.extend_from_slice(&idx[..n_val]);
        train_idx.extend_from_slice(&idx[n_val..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    if val_idx.is_empty() {
        val_idx = train_idx.clone();
    }

    let mut mean = vec![0.0; d];
    for &i in &train_idx {
        for (m, x) in mean.iter_mut().zip(&examples[i].features) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= train_idx.len() as f64);
    let mut scale = vec![0.0; d];
    for &i in &train_idx {
        for ((s, x), m) in scale.iter_mut().zip(&examples[i].features).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    scale.iter_mut().for_each(|s| {
        let sd = (*s / train_idx.len() as f64).sqrt();
        *s = if sd > 1e-12 { sd } else { 1.0 };
    });
    let std_x: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| e.features.iter().zip(&mean).zip(&scale).map(|((x, m), s)| (x - m) / s).collect())
        .collect();

    let mut dims = vec![d];
    dims.extend_from_slice(&params.hidden);
    dims.push(1);
    let mut rng = seed::rng(seed);
    let mut net = Network::random(&dims, &mut rng)?;
    let n_params = net.params.len();
    let (mut m1, mut m2) = (vec![0.0; n_params], vec![0.0; n_params]);
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut step = 0i32;

    let val_gold: Vec<bool> = val_idx.iter().map(|&i| examples[i].label).collect();
    let mut best = (net.clone(), 0usize, -1.0f64);
    let mut order = train_idx.clone();
    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| std_x[i].as_slice()).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| f64::from(u8::from(examples[i].label))).collect();
            let ws: Vec<f64> = batch.iter().map(|&i| examples[i].weight).collect();
            let (_, grad) = net.loss_and_grad(&xs, &ys, &ws);
            step += 1;
            let c1 = 1.0 - beta1.powi(step);
            let c2 = 1.0 - beta2.powi(step);
            for k in 0..n_params {
                let g = grad[k] + params.weight_decay * net.params[k];
                m1[k] = beta1 * m1[k] + (1.0 - beta1) * g;
                m2[k] = beta2 * m2[k] + (1.0 - beta2) * g * g;
                net.params[k] -= params.lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + eps);
            }
        }
        let pred: Vec<bool> = val_idx.iter().map(|&i| net.logit(&std_x[i]) >= 0.0).collect();
        let score = f1(&pred, &val_gold);
        if score > best.2 {
            best = (net.clone(), epoch, score);
        }
    }
    let (network, best_epoch, best_val_f1) = best;
    Ok(FnnModel {
        network,
        mean,
        scale,
        params: params.clone(),
        seed,
        best_epoch,
        best_val_f1: best_val_f1.max(0.0),
    })
}
