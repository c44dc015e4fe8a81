use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::sparse::{FeatureMatrix, RowView};

/// Gaussian naive Bayes. Variances are smoothed by adding
/// `1e-9 * max feature variance` to every per-class variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub class_count: usize,
    pub input_dim: usize,
    pub priors: Vec<f64>,
    /// `C x d`
    pub means: DenseMatrix,
    /// `C x d`, already smoothed.
    pub variances: DenseMatrix,
    pub epsilon: f64,
    /// Per class: `log prior + sum_j [-0.5 ln(2 pi var) - mean^2 / (2 var)]`,
    /// the log-posterior of the all-zero row.
    #[serde(skip)]
    zero_row: Vec<f64>,
}

pub const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNb {
    pub fn fit(x: &FeatureMatrix, y: &[usize], class_count: usize) -> Result<Self> {
        super::check_training(x, y, class_count)?;
        let d = x.ncols();
        let n = y.len();
        let mut counts = vec![0usize; class_count];
        let mut sums = DenseMatrix::zeros(class_count, d);
        let mut sq = DenseMatrix::zeros(class_count, d);
        let mut total = vec![0.0; d];
        let mut total_sq = vec![0.0; d];
        for (i, &c) in y.iter().enumerate() {
            counts[c] += 1;
            for (j, v) in x.row(i).iter() {
                sums.row_mut(c)[j] += v;
                sq.row_mut(c)[j] += v * v;
                total[j] += v;
                total_sq[j] += v * v;
            }
        }
        let max_var = total
            .iter()
            .zip(&total_sq)
            .map(|(s, q)| (q / n as f64 - (s / n as f64).powi(2)).max(0.0))
            .fold(0.0, f64::max);
        let epsilon = if max_var > 0.0 { VAR_SMOOTHING * max_var } else { VAR_SMOOTHING };

        let mut means = DenseMatrix::zeros(class_count, d);
        let mut variances = DenseMatrix::zeros(class_count, d);
        for c in 0..class_count {
            let nc = counts[c].max(1) as f64;
            for j in 0..d {
                let mean = sums.get(c, j) / nc;
                let var = (sq.get(c, j) / nc - mean * mean).max(0.0);
                means.set(c, j, mean);
                variances.set(c, j, var + epsilon);
            }
        }
        let priors = counts.iter().map(|&k| k as f64 / n as f64).collect();
        let mut model = Self {
            class_count,
            input_dim: d,
            priors,
            means,
            variances,
            epsilon,
            zero_row: Vec::new(),
        };
        model.refresh();
        Ok(model)
    }

    pub(crate) fn from_parts(
        priors: Vec<f64>,
        means: DenseMatrix,
        variances: DenseMatrix,
        epsilon: f64,
    ) -> Self {
        let mut model = Self {
            class_count: priors.len(),
            input_dim: means.ncols(),
            priors,
            means,
            variances,
            epsilon,
            zero_row: Vec::new(),
        };
        model.refresh();
        model
    }

    fn refresh(&mut self) {
        self.zero_row = (0..self.class_count)
            .map(|c| {
                let mu = self.means.row(c);
                let var = self.variances.row(c);
                self.priors[c].ln()
                    + mu.iter()
                        .zip(var)
                        .map(|(m, v)| -0.5 * (2.0 * PI * v).ln() - m * m / (2.0 * v))
                        .sum::<f64>()
            })
            .collect();
    }

    /// Log-posterior (up to the shared evidence term) of each class.
    pub fn log_posterior(&self, row: RowView<'_>) -> Vec<f64> {
        (0..self.class_count)
            .map(|c| {
                let mu = self.means.row(c);
                let var = self.variances.row(c);
                let mut s = self.zero_row[c];
                for (j, v) in row.iter() {
                    s -= (v * v - 2.0 * v * mu[j]) / (2.0 * var[j]);
                }
                s
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Classes absent from training score `-inf`.
    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        super::check_dim(self.input_dim, x)?;
        let mut out = DenseMatrix::zeros(x.nrows(), self.class_count);
        for i in 0..x.nrows() {
            out.row_mut(i).copy_from_slice(&self.log_posterior(x.row(i)));
        }
        Ok(out)
    }
}
