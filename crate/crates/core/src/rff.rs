//! Random Fourier features for the Gaussian kernel `exp(-gamma ||a - b||^2)`.
//!
//! `z(x)_j = sqrt(2/D) cos(w_j . x + b_j)` with `w_j ~ N(0, 2 gamma I)` and
//! `b_j ~ U[0, 2 pi)`, so that `z(a) . z(b)` is an unbiased estimate of the
//! kernel. The projector is a pure function of `(d, D, gamma, seed)`; it never
//! looks at data.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, Stream};
use crate::sparse::{FeatureMatrix, RowView};

pub const DEFAULT_OUTPUT_DIM: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct RffProjector {
    input_dim: usize,
    output_dim: usize,
    gamma: f64,
    seed: u64,
    /// Input-major: entry `(i, j)` at `i * output_dim + j` is component `i`
    /// of frequency vector `w_j`.
    weights: Vec<f64>,
    phases: Vec<f64>,
}

impl RffProjector {
    pub fn new(input_dim: usize, output_dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidDimension("input dimension must be >= 1".into()));
        }
        if output_dim == 0 {
            return Err(Error::InvalidDimension("output dimension must be >= 1".into()));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidGamma(gamma));
        }
        let normal = Normal::new(0.0, (2.0 * gamma).sqrt())
            .map_err(|_| Error::InvalidGamma(gamma))?;
        let mut w_rng = rng::stream(seed, Stream::RffWeights);
        let weights: Vec<f64> = (0..input_dim * output_dim)
            .map(|_| normal.sample(&mut w_rng))
            .collect();
        let mut b_rng = rng::stream(seed, Stream::RffPhases);
        let phases = (0..output_dim)
            .map(|_| b_rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        Ok(Self {
            input_dim,
            output_dim,
            gamma,
            seed,
            weights,
            phases,
        })
    }

    /// Gaussian bandwidth defaulting to `1 / d`.
    pub fn with_default_gamma(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        Self::new(input_dim, output_dim, 1.0 / input_dim.max(1) as f64, seed)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Frequency vector `w_j`.
    pub fn frequency(&self, j: usize) -> Vec<f64> {
        (0..self.input_dim)
            .map(|i| self.weights[i * self.output_dim + j])
            .collect()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn project_row(&self, x: RowView<'_>) -> Result<Vec<f64>> {
        if let RowView::Dense(v) = x {
            if v.len() != self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim,
                    actual: v.len(),
                });
            }
        }
        let dd = self.output_dim;
        let mut acc = self.phases.clone();
        for (i, v) in x.iter() {
            if i >= self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim,
                    actual: i + 1,
                });
            }
            if v == 0.0 {
                continue;
            }
            let w = &self.weights[i * dd..(i + 1) * dd];
            for (a, &wi) in acc.iter_mut().zip(w) {
                *a += v * wi;
            }
        }
        let scale = (2.0 / dd as f64).sqrt();
        acc.iter_mut().for_each(|a| *a = scale * a.cos());
        Ok(acc)
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.project_row(RowView::Dense(x))
    }

    /// Projects every row; row order is preserved.
    pub fn project_matrix(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.ncols(),
            });
        }
        let one = |i: usize| self.project_row(x.row(i));
        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<f64>> = (0..x.nrows()).into_par_iter().map(one).collect::<Result<_>>()?;
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<f64>> = (0..x.nrows()).map(one).collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(rows.len() * self.output_dim);
        for r in &rows {
            data.extend_from_slice(r);
        }
        DenseMatrix::from_vec(rows.len(), self.output_dim, data)
    }

    pub fn header(&self) -> RffHeader {
        RffHeader {
            format: RffHeader::FORMAT.into(),
            version: RffHeader::VERSION,
            kernel: "gaussian".into(),
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            gamma: self.gamma,
            seed: self.seed,
        }
    }

    pub fn from_header(header: &RffHeader) -> Result<Self> {
        if header.format != RffHeader::FORMAT || header.version != RffHeader::VERSION {
            return Err(Error::format(
                "RFF header",
                format!("unsupported {} v{}", header.format, header.version),
            ));
        }
        Self::new(header.input_dim, header.output_dim, header.gamma, header.seed)
    }
}

/// Serialized projector: W and b are regenerated from the seed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffHeader {
    pub format: String,
    pub version: u32,
    pub kernel: String,
    pub input_dim: usize,
    pub output_dim: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl RffHeader {
    pub const FORMAT: &'static str = "seqclass-rff";
    pub const VERSION: u32 = 1;
}

/// `exp(-gamma ||a - b||^2)`
pub fn exact_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-gamma * sq).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::sparse::CsrMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn construction_is_deterministic() {
        let a = RffProjector::new(9261, 1000, 1.0 / 9261.0, 42).unwrap();
        let b = RffProjector::new(9261, 1000, 1.0 / 9261.0, 42).unwrap();
        assert_eq!(a, b);
        let c = RffProjector::new(9261, 1000, 1.0 / 9261.0, 43).unwrap();
        assert_ne!(a.phases, c.phases);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(RffProjector::new(4, 0, 1.0, 1), Err(Error::InvalidDimension(_))));
        assert!(matches!(RffProjector::new(0, 4, 1.0, 1), Err(Error::InvalidDimension(_))));
        assert!(matches!(RffProjector::new(4, 4, -1.0, 1), Err(Error::InvalidGamma(_))));
        assert!(matches!(RffProjector::new(4, 4, f64::NAN, 1), Err(Error::InvalidGamma(_))));
    }

    #[test]
    fn sampling_distribution() {
        let gamma = 0.5;
        let p = RffProjector::new(50, 400, gamma, 9).unwrap();
        let n = p.weights.len() as f64;
        let mean = p.weights.iter().sum::<f64>() / n;
        let var = p.weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02);
        assert!((var - 2.0 * gamma).abs() < 0.03, "variance {var}");
        assert!(p.phases.iter().all(|&b| (0.0..std::f64::consts::TAU).contains(&b)));
    }

    #[test]
    fn zero_vector_maps_to_phase_cosines() {
        let p = RffProjector::new(8, 64, 1.0, 3).unwrap();
        let z = p.project(&[0.0; 8]).unwrap();
        let bound = (2.0f64 / 64.0).sqrt();
        for (zj, bj) in z.iter().zip(p.phases()) {
            assert!((zj - bound * bj.cos()).abs() < 1e-15);
            assert!(zj.abs() <= bound);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = RffProjector::new(8, 16, 1.0, 3).unwrap();
        assert!(matches!(p.project(&[0.0; 7]), Err(Error::DimensionMismatch { .. })));
        let m = FeatureMatrix::Sparse(CsrMatrix::new(9));
        assert!(p.project_matrix(&m).is_err());
    }

    #[test]
    fn sparse_and_dense_rows_agree() {
        let p = RffProjector::new(6, 32, 0.3, 5).unwrap();
        let dense = [0.0, 1.5, 0.0, 0.0, -2.0, 0.0];
        let mut m = CsrMatrix::new(6);
        m.push_row([(1, 1.5), (4, -2.0)]).unwrap();
        let a = p.project(&dense).unwrap();
        let b = p.project_row(m.row(0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_kernel_examples() {
        assert_eq!(exact_kernel(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 1.0);
        // ||a - b||^2 = 2
        let k = exact_kernel(&[1.0, 0.0], &[0.0, 1.0], 0.5).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-15);
        let k = exact_kernel(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        assert!((k - (-2.0f64).exp()).abs() < 1e-15);
        assert!(exact_kernel(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn approximates_kernel_at_large_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 32;
        let a = unit_vector(&mut rng, d);
        let b = unit_vector(&mut rng, d);
        let sq: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        let gamma = 1.0 / sq;
        let p = RffProjector::new(d, 4096, gamma, 1).unwrap();
        let approx = dot(&p.project(&a).unwrap(), &p.project(&b).unwrap());
        assert!((approx - (-1.0f64).exp()).abs() <= 0.08, "approx {approx}");
        let self_k = dot(&p.project(&a).unwrap(), &p.project(&a).unwrap());
        assert!((self_k - 1.0).abs() <= 0.1);
    }

    #[test]
    fn header_regenerates_projector() {
        let p = RffProjector::new(12, 20, 0.25, 77).unwrap();
        let json = serde_json::to_string(&p.header()).unwrap();
        let back = RffProjector::from_header(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    proptest::proptest! {
        #[test]
        fn embedding_norm_is_bounded(x in proptest::collection::vec(-5.0f64..5.0, 10), seed in 0u64..1000) {
            let p = RffProjector::new(10, 50, 0.7, seed).unwrap();
            let z = p.project(&x).unwrap();
            let bound = (2.0f64 / 50.0).sqrt();
            proptest::prop_assert!(z.iter().all(|v| v.abs() <= bound + 1e-15));
            proptest::prop_assert!(dot(&z, &z) <= 2.0 + 1e-12);
            proptest::prop_assert_eq!(z, p.project(&x).unwrap());
        }
    }
}
