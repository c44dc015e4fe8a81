//! One-hidden-layer ReLU network with a softmax output, trained with Adam
//! on integer-label cross-entropy.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::linear_models::{softmax_in_place, Classifier};
use crate::rng::{self, Stream};
use crate::sparse::{FeatureMatrix, RowView};

pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub class_count: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl NetConfig {
    /// Hidden width equal to the input dimension, batch 100, 10 epochs.
    pub fn new(input_dim: usize, class_count: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_width: input_dim,
            class_count,
            batch_size: 100,
            epochs: 10,
            adam: AdamConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("network {what}")));
        if self.input_dim == 0 {
            return bad("input_dim must be >= 1");
        }
        if self.hidden_width == 0 {
            return bad("hidden_width must be >= 1");
        }
        if self.class_count < 2 {
            return bad("needs at least 2 classes");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return bad("Adam hyperparameters are out of range");
        }
        Ok(())
    }
}

/// Parameters. `w1` is stored input-major (`d x h`, row `j` holds the
/// weights from input `j` to every hidden unit); `w2` is `C x h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardNet {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub class_count: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros_like(net: &FeedForwardNet) -> Self {
        Self {
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: vec![0.0; net.b2.len()],
        }
    }

    fn clear(&mut self) {
        for t in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

struct Activations {
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

impl FeedForwardNet {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: &NetConfig) -> Result<Self> {
        config.validate()?;
        let (d, h, c) = (config.input_dim, config.hidden_width, config.class_count);
        let mut rng = rng::stream(config.seed, Stream::NetInit);
        let limit1 = glorot_limit(d, h);
        let w1 = (0..d * h).map(|_| rng.random_range(-limit1..=limit1)).collect();
        let limit2 = glorot_limit(h, c);
        let w2 = (0..c * h).map(|_| rng.random_range(-limit2..=limit2)).collect();
        Ok(Self {
            input_dim: d,
            hidden_width: h,
            class_count: c,
            w1,
            b1: vec![0.0; h],
            w2,
            b2: vec![0.0; c],
        })
    }

    fn activations(&self, x: RowView<'_>) -> Activations {
        let h = self.hidden_width;
        let mut pre = self.b1.clone();
        for (j, v) in x.iter() {
            if v == 0.0 {
                continue;
            }
            let w = &self.w1[j * h..(j + 1) * h];
            for (p, &wj) in pre.iter_mut().zip(w) {
                *p += v * wj;
            }
        }
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let mut probs: Vec<f64> = (0..self.class_count)
            .map(|c| {
                let w = &self.w2[c * h..(c + 1) * h];
                self.b2[c] + w.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        softmax_in_place(&mut probs);
        Activations {
            pre_hidden: pre,
            hidden,
            probs,
        }
    }

    /// Class probabilities, `n x C`.
    pub fn forward(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.ncols(),
            });
        }
        let mut out = DenseMatrix::zeros(x.nrows(), self.class_count);
        for i in 0..x.nrows() {
            out.row_mut(i)
                .copy_from_slice(&self.activations(x.row(i)).probs);
        }
        Ok(out)
    }

    /// Mean loss over `rows` and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, x: &FeatureMatrix, y: &[usize], rows: &[usize]) -> Result<(f64, Gradients)> {
        let mut grads = Gradients::zeros_like(self);
        let loss = self.accumulate(x, y, rows, &mut grads)?;
        Ok((loss, grads))
    }

    fn accumulate(&self, x: &FeatureMatrix, y: &[usize], rows: &[usize], g: &mut Gradients) -> Result<f64> {
        let (h, c) = (self.hidden_width, self.class_count);
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        let mut delta_hidden = vec![0.0; h];
        for &i in rows {
            let label = y[i];
            if label >= c {
                return Err(Error::LabelOutOfRange { label, classes: c });
            }
            let row = x.row(i);
            let act = self.activations(row);
            loss -= act.probs[label].max(PROBABILITY_FLOOR).ln();
            delta_hidden.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..c {
                let delta = (act.probs[k] - if k == label { 1.0 } else { 0.0 }) * scale;
                g.b2[k] += delta;
                let w = &self.w2[k * h..(k + 1) * h];
                let gw = &mut g.w2[k * h..(k + 1) * h];
                for u in 0..h {
                    gw[u] += delta * act.hidden[u];
                    delta_hidden[u] += delta * w[u];
                }
            }
            for u in 0..h {
                if act.pre_hidden[u] <= 0.0 {
                    delta_hidden[u] = 0.0;
                }
                g.b1[u] += delta_hidden[u];
            }
            for (j, v) in row.iter() {
                if v == 0.0 {
                    continue;
                }
                let gw = &mut g.w1[j * h..(j + 1) * h];
                for (gu, du) in gw.iter_mut().zip(&delta_hidden) {
                    *gu += v * du;
                }
            }
        }
        Ok(loss * scale)
    }

    fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Trains with a fresh seeded permutation of the rows every epoch.
    /// Returns the mean training loss of every epoch.
    pub fn train(config: &NetConfig, x: &FeatureMatrix, y: &[usize]) -> Result<(Self, Vec<f64>)> {
        let n = x.nrows();
        let mut rng = rng::stream(config.seed, Stream::NetShuffle);
        Self::train_with_schedule(config, x, y, |_| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order
        })
    }

    /// Trains visiting rows in the order `schedule(epoch)` returns; each
    /// order must be a permutation of `0..n`. The last partial batch is used.
    pub fn train_with_schedule<F>(config: &NetConfig, x: &FeatureMatrix, y: &[usize], mut schedule: F) -> Result<(Self, Vec<f64>)>
    where
        F: FnMut(usize) -> Vec<usize>,
    {
        config.validate()?;
        let n = x.nrows();
        if n == 0 || y.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
        }
        if x.ncols() != config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: config.input_dim,
                actual: x.ncols(),
            });
        }
        crate::linear_models::check_labels(y, config.class_count)?;

        let mut net = Self::init(config)?;
        let mut adam = AdamState::new(&net);
        let mut grads = Gradients::zeros_like(&net);
        let mut trace = Vec::with_capacity(config.epochs);
        for epoch in 0..config.epochs {
            let order = schedule(epoch);
            debug_assert_eq!(order.len(), n);
            let mut total = 0.0;
            for batch in order.chunks(config.batch_size) {
                grads.clear();
                let loss = net.accumulate(x, y, batch, &mut grads)?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { iteration: adam.step + 1 });
                }
                total += loss * batch.len() as f64;
                adam.update(&mut net, &grads, &config.adam);
            }
            trace.push(total / n as f64);
        }
        Ok((net, trace))
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    const MAGIC: &'static [u8] = b"SQNN";
    const VERSION: u32 = 1;

    /// Checkpoint: magic `SQNN`, version, the training config, then the
    /// four tensors as length-prefixed f64 arrays.
    pub fn write_checkpoint<W: Write>(&self, out: W, config: &NetConfig) -> Result<()> {
        let mut enc = Encoder::new(out);
        enc.magic(Self::MAGIC)?;
        enc.u32(Self::VERSION)?;
        write_config(&mut enc, config)?;
        for t in [&self.w1, &self.b1, &self.w2, &self.b2] {
            enc.f64s(t)?;
        }
        enc.finish()?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(input: R) -> Result<(Self, NetConfig)> {
        let mut dec = Decoder::new(input, "network checkpoint");
        dec.expect_magic(Self::MAGIC)?;
        let version = dec.u32()?;
        if version != Self::VERSION {
            return dec.fail(format!("unsupported version {version}"));
        }
        let config = read_config(&mut dec)?;
        let mut net = FeedForwardNet {
            input_dim: config.input_dim,
            hidden_width: config.hidden_width,
            class_count: config.class_count,
            w1: dec.f64s()?,
            b1: dec.f64s()?,
            w2: dec.f64s()?,
            b2: dec.f64s()?,
        };
        let (d, h, c) = (net.input_dim, net.hidden_width, net.class_count);
        let expected = [d * h, h, c * h, c];
        if net.params_mut().iter().map(|t| t.len()).ne(expected) {
            return dec.fail("tensor shapes do not match the config");
        }
        Ok((net, config))
    }
}

pub(crate) fn write_config<W: Write>(enc: &mut Encoder<W>, c: &NetConfig) -> Result<()> {
    enc.usize(c.input_dim)?;
    enc.usize(c.hidden_width)?;
    enc.usize(c.class_count)?;
    enc.usize(c.batch_size)?;
    enc.usize(c.epochs)?;
    enc.f64(c.adam.learning_rate)?;
    enc.f64(c.adam.beta1)?;
    enc.f64(c.adam.beta2)?;
    enc.f64(c.adam.epsilon)?;
    enc.u64(c.seed)
}

pub(crate) fn read_config<R: Read>(dec: &mut Decoder<R>) -> Result<NetConfig> {
    Ok(NetConfig {
        input_dim: dec.usize()?,
        hidden_width: dec.usize()?,
        class_count: dec.usize()?,
        batch_size: dec.usize()?,
        epochs: dec.usize()?,
        adam: AdamConfig {
            learning_rate: dec.f64()?,
            beta1: dec.f64()?,
            beta2: dec.f64()?,
            epsilon: dec.f64()?,
        },
        seed: dec.u64()?,
    })
}

fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Mean of `-ln max(p[i, y_i], 1e-12)` over rows.
pub fn cross_entropy(probs: &DenseMatrix, y: &[usize]) -> Result<f64> {
    if probs.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.nrows(),
            actual: y.len(),
        });
    }
    let c = probs.ncols();
    let mut total = 0.0;
    for (i, &label) in y.iter().enumerate() {
        if label >= c {
            return Err(Error::LabelOutOfRange { label, classes: c });
        }
        total -= probs.get(i, label).max(PROBABILITY_FLOOR).ln();
    }
    Ok(total / y.len().max(1) as f64)
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: usize,
    first: [Vec<f64>; 4],
    second: [Vec<f64>; 4],
}

impl AdamState {
    pub fn new(net: &FeedForwardNet) -> Self {
        let shapes = [net.w1.len(), net.b1.len(), net.w2.len(), net.b2.len()];
        Self {
            step: 0,
            first: shapes.map(|n| vec![0.0; n]),
            second: shapes.map(|n| vec![0.0; n]),
        }
    }

    /// One bias-corrected Adam step.
    pub fn update(&mut self, net: &mut FeedForwardNet, g: &Gradients, cfg: &AdamConfig) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let grads = [&g.w1, &g.b1, &g.w2, &g.b2];
        for (k, param) in net.params_mut().into_iter().enumerate() {
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            for (((p, &gi), mi), vi) in param.iter_mut().zip(grads[k]).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

impl Classifier for FeedForwardNet {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        self.forward(x)
    }
}
