use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::sparse::FeatureMatrix;

/// Predicts the most frequent training class for every input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Majority {
    pub majority_class: usize,
    pub class_count: usize,
    pub input_dim: usize,
}

impl Majority {
    /// Ties are broken toward the smallest class id.
    pub fn fit(labels: &[usize], class_count: usize, input_dim: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        super::check_labels(labels, class_count)?;
        let mut counts = vec![0usize; class_count];
        for &y in labels {
            counts[y] += 1;
        }
        let mut majority_class = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[majority_class] {
                majority_class = c;
            }
        }
        Ok(Self {
            majority_class,
            class_count,
            input_dim,
        })
    }

    pub fn predict_n(&self, n: usize) -> Vec<usize> {
        vec![self.majority_class; n]
    }
}

impl Classifier for Majority {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// One-hot rows on the majority class: every column is constant.
    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        let mut s = DenseMatrix::zeros(x.nrows(), self.class_count);
        for i in 0..x.nrows() {
            s.set(i, self.majority_class, 1.0);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    #[test]
    fn predicts_most_frequent() {
        let m = Majority::fit(&[0, 0, 1], 2, 1).unwrap();
        assert_eq!(m.predict_n(3), vec![0, 0, 0]);
        let x = FeatureMatrix::Sparse({
            let mut c = CsrMatrix::new(1);
            c.push_row([(0, 5.0)]).unwrap();
            c
        });
        assert_eq!(m.predict(&x).unwrap(), vec![0]);
    }

    #[test]
    fn ties_break_low() {
        assert_eq!(Majority::fit(&[2, 1, 1, 2], 3, 1).unwrap().majority_class, 1);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(Majority::fit(&[], 2, 1), Err(Error::EmptyTrainingSet)));
        assert!(matches!(Majority::fit(&[3], 2, 1), Err(Error::LabelOutOfRange { .. })));
    }
}
