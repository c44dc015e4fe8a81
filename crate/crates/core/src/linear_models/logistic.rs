use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Classifier};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sparse::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegressionConfig {
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
    /// Recorded in reports; the solver starts from zero weights and is
    /// deterministic regardless of the seed.
    pub seed: u64,
}

impl Default for LogisticRegressionConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            max_iters: 1000,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// `C x d`
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
}

impl LogisticParams {
    pub fn zeros(class_count: usize, dim: usize) -> Self {
        Self {
            weights: DenseMatrix::zeros(class_count, dim),
            bias: vec![0.0; class_count],
        }
    }

    fn logits(&self, x: &FeatureMatrix, i: usize) -> Vec<f64> {
        let row = x.row(i);
        (0..self.bias.len())
            .map(|c| self.bias[c] + row.dot(self.weights.row(c)))
            .collect()
    }

    fn squared_norm(&self) -> f64 {
        self.weights.as_slice().iter().map(|w| w * w).sum()
    }

    fn step(&self, grad: &LogisticParams, t: f64) -> LogisticParams {
        let mut next = self.clone();
        for (w, g) in next.weights.as_mut_slice().iter_mut().zip(grad.weights.as_slice()) {
            *w -= t * g;
        }
        for (b, g) in next.bias.iter_mut().zip(&grad.bias) {
            *b -= t * g;
        }
        next
    }

    fn dot(&self, other: &LogisticParams) -> f64 {
        let w: f64 = self
            .weights
            .as_slice()
            .iter()
            .zip(other.weights.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        w + self.bias.iter().zip(&other.bias).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn check_finite(loss: f64, iteration: usize) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFiniteLoss { iteration })
    }
}

pub fn logreg_loss(x: &FeatureMatrix, y: &[usize], params: &LogisticParams, l2_lambda: f64) -> f64 {
    let n = y.len() as f64;
    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let z = params.logits(x, i);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[yi];
    }
    loss / n + 0.5 * l2_lambda * params.squared_norm()
}

/// Mean multinomial cross-entropy plus `(lambda / 2) ||W||^2` (bias not
/// penalized), with its gradient.
pub fn logreg_loss_and_grad(
    x: &FeatureMatrix,
    y: &[usize],
    params: &LogisticParams,
    l2_lambda: f64,
) -> (f64, LogisticParams) {
    let n = y.len() as f64;
    let classes = params.bias.len();
    let mut grad = LogisticParams::zeros(classes, params.weights.ncols());
    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let mut p = params.logits(x, i);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + p.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - p[yi];
        softmax_in_place(&mut p);
        p[yi] -= 1.0;
        let row = x.row(i);
        for (c, &r) in p.iter().enumerate() {
            grad.bias[c] += r / n;
            row.axpy(r / n, grad.weights.row_mut(c));
        }
    }
    for (g, w) in grad
        .weights
        .as_mut_slice()
        .iter_mut()
        .zip(params.weights.as_slice())
    {
        *g += l2_lambda * w;
    }
    (loss / n + 0.5 * l2_lambda * params.squared_norm(), grad)
}

/// Multinomial logistic regression fitted by full-batch gradient descent
/// with backtracking (Armijo) line search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub params: LogisticParams,
    pub config: LogisticRegressionConfig,
    /// Objective after every accepted step, starting with the initial value.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

impl LogisticRegression {
    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        class_count: usize,
        config: LogisticRegressionConfig,
    ) -> Result<Self> {
        super::check_training(x, y, class_count)?;
        let distinct = {
            let mut seen = vec![false; class_count];
            y.iter().for_each(|&c| seen[c] = true);
            seen.iter().filter(|&&s| s).count()
        };
        if class_count < 2 || distinct < 2 {
            return Err(Error::DegenerateLabels);
        }
        if !(config.l2_lambda >= 0.0) {
            return Err(Error::InvalidConfig("l2_lambda must be >= 0".into()));
        }

        let mut params = LogisticParams::zeros(class_count, x.ncols());
        let (mut loss, mut grad) = logreg_loss_and_grad(x, y, &params, config.l2_lambda);
        check_finite(loss, 0)?;
        let mut trace = vec![loss];
        let mut step = 1.0;
        let mut iterations = 0;
        while iterations < config.max_iters {
            let g2 = grad.dot(&grad);
            if g2.sqrt() < config.tol {
                break;
            }
            let mut accepted = None;
            let mut t = step;
            for _ in 0..MAX_HALVINGS {
                let candidate = params.step(&grad, t);
                let value = logreg_loss(x, y, &candidate, config.l2_lambda);
                if value.is_finite() && value <= loss - ARMIJO * t * g2 {
                    accepted = Some((candidate, t));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, t)) = accepted else {
                // No descent at machine precision: converged.
                break;
            };
            iterations += 1;
            params = next;
            let (l, g) = logreg_loss_and_grad(x, y, &params, config.l2_lambda);
            loss = check_finite(l, iterations)?;
            grad = g;
            trace.push(loss);
            step = t * 2.0;
        }
        Ok(Self {
            params,
            config,
            loss_trace: trace,
            iterations,
        })
    }

    /// Row-stochastic `n x C` class probabilities.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        super::check_dim(self.params.weights.ncols(), x)?;
        let c = self.params.bias.len();
        let mut out = DenseMatrix::zeros(x.nrows(), c);
        for i in 0..x.nrows() {
            let mut z = self.params.logits(x, i);
            softmax_in_place(&mut z);
            out.row_mut(i).copy_from_slice(&z);
        }
        Ok(out)
    }
}

impl Classifier for LogisticRegression {
    fn class_count(&self) -> usize {
        self.params.bias.len()
    }

    fn input_dim(&self) -> usize {
        self.params.weights.ncols()
    }

    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        self.predict_proba(x)
    }
}
