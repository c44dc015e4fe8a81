//! The MAJORITY baseline and the classical classifiers.

mod logistic;
mod majority;
mod naive_bayes;
mod ridge;

pub use logistic::{logreg_loss, logreg_loss_and_grad, LogisticParams, LogisticRegression, LogisticRegressionConfig};
pub use majority::Majority;
pub use naive_bayes::{GaussianNb, VAR_SMOOTHING};
pub use ridge::{RidgeClassifier, RidgeSolver};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sparse::FeatureMatrix;

/// Anything that assigns per-class scores to feature rows.
pub trait Classifier {
    fn class_count(&self) -> usize;

    fn input_dim(&self) -> usize;

    /// `n x C` matrix of class scores (probabilities, log-posteriors or
    /// decision values depending on the model). Larger means more likely.
    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix>;

    /// Argmax of each score row; ties go to the smallest class id.
    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        let s = self.scores(x)?;
        Ok((0..s.nrows()).map(|i| s.row_argmax(i)).collect())
    }
}

pub(crate) fn check_dim(expected: usize, x: &FeatureMatrix) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn check_labels(y: &[usize], class_count: usize) -> Result<()> {
    match y.iter().find(|&&c| c >= class_count) {
        Some(&label) => Err(Error::LabelOutOfRange {
            label,
            classes: class_count,
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_training(x: &FeatureMatrix, y: &[usize], class_count: usize) -> Result<()> {
    if y.is_empty() || x.nrows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    check_labels(y, class_count)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
