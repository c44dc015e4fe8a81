use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dot, Cholesky, DenseMatrix};
use crate::sparse::FeatureMatrix;

/// How the regularized least-squares systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RidgeSolver {
    /// Cholesky on the smaller Gram system when it has at most
    /// [`RidgeClassifier::DIRECT_LIMIT`] rows, conjugate gradient otherwise.
    #[default]
    Auto,
    /// `(Xc^T Xc + alpha I) w = Xc^T t`
    Primal,
    /// `w = Xc^T (Xc Xc^T + alpha I)^-1 t`
    Dual,
    ConjugateGradient,
}

/// One-vs-rest ridge regression on `{+1, -1}` targets. The intercept is
/// unpenalized: features and targets are centered before solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeClassifier {
    pub alpha: f64,
    /// `C x d`
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    pub solver: RidgeSolver,
}

impl RidgeClassifier {
    pub const DIRECT_LIMIT: usize = 4096;
    pub const CG_TOL: f64 = 1e-8;

    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        class_count: usize,
        alpha: f64,
        solver: RidgeSolver,
    ) -> Result<Self> {
        super::check_training(x, y, class_count)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge alpha must be > 0, got {alpha}")));
        }
        let (n, d) = (x.nrows(), x.ncols());
        let mean = x.column_means();
        let targets: Vec<Vec<f64>> = (0..class_count)
            .map(|c| y.iter().map(|&yi| if yi == c { 1.0 } else { -1.0 }).collect())
            .collect();
        let target_means: Vec<f64> = targets.iter().map(|t| t.iter().sum::<f64>() / n as f64).collect();

        let solver = match solver {
            RidgeSolver::Auto if d <= n && d <= Self::DIRECT_LIMIT => RidgeSolver::Primal,
            RidgeSolver::Auto if n <= Self::DIRECT_LIMIT => RidgeSolver::Dual,
            RidgeSolver::Auto => RidgeSolver::ConjugateGradient,
            s => s,
        };

        let centered_t: Vec<Vec<f64>> = targets
            .iter()
            .zip(&target_means)
            .map(|(t, m)| t.iter().map(|v| v - m).collect())
            .collect();

        let ws: Vec<Vec<f64>> = match solver {
            RidgeSolver::Primal => {
                let gram = centered_gram_primal(x, &mean, alpha);
                let chol = Cholesky::factor(&gram)?;
                centered_t
                    .iter()
                    .map(|t| chol.solve(&centered_xt_mul(x, &mean, t)))
                    .collect()
            }
            RidgeSolver::Dual => {
                let gram = centered_gram_dual(x, &mean, alpha);
                let chol = Cholesky::factor(&gram)?;
                centered_t
                    .iter()
                    .map(|t| centered_xt_mul(x, &mean, &chol.solve(t)))
                    .collect()
            }
            RidgeSolver::ConjugateGradient => centered_t
                .iter()
                .map(|t| {
                    let rhs = centered_xt_mul(x, &mean, t);
                    let apply = |v: &[f64]| {
                        let xv = centered_x_mul(x, &mean, v);
                        let mut out = centered_xt_mul(x, &mean, &xv);
                        out.iter_mut().zip(v).for_each(|(o, vi)| *o += alpha * vi);
                        out
                    };
                    conjugate_gradient(apply, &rhs, Self::CG_TOL, 10 * d.max(10)).0
                })
                .collect(),
            RidgeSolver::Auto => unreachable!(),
        };

        let mut weights = DenseMatrix::zeros(class_count, d);
        let mut bias = Vec::with_capacity(class_count);
        for (c, w) in ws.iter().enumerate() {
            weights.row_mut(c).copy_from_slice(w);
            bias.push(target_means[c] - dot(&mean, w));
        }
        Ok(Self {
            alpha,
            weights,
            bias,
            solver,
        })
    }
}

/// `Xc v` where `Xc = X - 1 mean^T`.
fn centered_x_mul(x: &FeatureMatrix, mean: &[f64], v: &[f64]) -> Vec<f64> {
    let shift = dot(mean, v);
    (0..x.nrows()).map(|i| x.row(i).dot(v) - shift).collect()
}

/// `Xc^T u`.
fn centered_xt_mul(x: &FeatureMatrix, mean: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.ncols()];
    for (i, &ui) in u.iter().enumerate() {
        x.row(i).axpy(ui, &mut out);
    }
    let total: f64 = u.iter().sum();
    out.iter_mut().zip(mean).for_each(|(o, m)| *o -= total * m);
    out
}

/// `Xc^T Xc + alpha I = X^T X - n mean mean^T + alpha I`.
fn centered_gram_primal(x: &FeatureMatrix, mean: &[f64], alpha: f64) -> DenseMatrix {
    let (n, d) = (x.nrows(), x.ncols());
    let mut g = DenseMatrix::zeros(d, d);
    for i in 0..n {
        let entries: Vec<(usize, f64)> = x.row(i).iter().filter(|&(_, v)| v != 0.0).collect();
        for &(a, va) in &entries {
            let row = g.row_mut(a);
            for &(b, vb) in &entries {
                row[b] += va * vb;
            }
        }
    }
    for a in 0..d {
        let row = g.row_mut(a);
        for b in 0..d {
            row[b] -= n as f64 * mean[a] * mean[b];
        }
        row[a] += alpha;
    }
    g
}

/// `Xc Xc^T + alpha I`, entry `(i, k) = x_i.x_k - x_i.m - x_k.m + m.m`.
fn centered_gram_dual(x: &FeatureMatrix, mean: &[f64], alpha: f64) -> DenseMatrix {
    let (n, d) = (x.nrows(), x.ncols());
    let row_dot_mean: Vec<f64> = (0..n).map(|i| x.row(i).dot(mean)).collect();
    let mm = dot(mean, mean);
    let mut g = DenseMatrix::zeros(n, n);
    let mut scratch = vec![0.0; d];
    for i in 0..n {
        let ri = x.row(i);
        ri.axpy(1.0, &mut scratch);
        for k in i..n {
            let v = x.row(k).dot(&scratch) - row_dot_mean[i] - row_dot_mean[k] + mm;
            g.set(i, k, v);
            g.set(k, i, v);
        }
        g.set(i, i, g.get(i, i) + alpha);
        for (j, _) in ri.iter() {
            scratch[j] = 0.0;
        }
    }
    g
}

impl Classifier for RidgeClassifier {
    fn class_count(&self) -> usize {
        self.bias.len()
    }

    fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        super::check_dim(self.weights.ncols(), x)?;
        let c = self.bias.len();
        let mut out = DenseMatrix::zeros(x.nrows(), c);
        for i in 0..x.nrows() {
            let row = x.row(i);
            for k in 0..c {
                out.set(i, k, self.bias[k] + row.dot(self.weights.row(k)));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn dense(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::Dense(DenseMatrix::from_rows(&rows).unwrap())
    }

    /// Closed-form 1-d ridge with an unpenalized intercept.
    fn ridge_1d(x: &[f64], t: &[f64], alpha: f64) -> (f64, f64) {
        let n = x.len() as f64;
        let (mx, mt) = (x.iter().sum::<f64>() / n, t.iter().sum::<f64>() / n);
        let sxt: f64 = x.iter().zip(t).map(|(a, b)| (a - mx) * (b - mt)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let w = sxt / (sxx + alpha);
        (w, mt - w * mx)
    }

    #[test]
    fn one_dimensional_boundary_at_zero() {
        let xs = [-1.0, 1.0];
        let x = dense(xs.iter().map(|&v| vec![v]).collect());
        let alpha = 1e-9;
        let model = RidgeClassifier::fit(&x, &[0, 1], 2, alpha, RidgeSolver::Auto).unwrap();
        let (w1, b1) = ridge_1d(&xs, &[-1.0, 1.0], alpha);
        assert!((model.weights.get(1, 0) - w1).abs() < 1e-12);
        assert!((model.bias[1] - b1).abs() < 1e-12);
        // Scores cross where w1 x + b1 = -(w1 x + b1), i.e. at x = 0.
        assert!((-b1 / w1).abs() < 1e-12);
        let probe = dense(vec![vec![-1e-3], vec![1e-3]]);
        assert_eq!(model.predict(&probe).unwrap(), vec![0, 1]);
    }

    #[test]
    fn unbalanced_1d_matches_closed_form() {
        let xs = [-2.0, -1.0, 0.5, 1.0, 3.0];
        let y = [0, 0, 0, 1, 1];
        let x = dense(xs.iter().map(|&v| vec![v]).collect());
        let model = RidgeClassifier::fit(&x, &y, 2, 0.7, RidgeSolver::Primal).unwrap();
        let t: Vec<f64> = y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
        let (w, b) = ridge_1d(&xs, &t, 0.7);
        assert!((model.weights.get(1, 0) - w).abs() < 1e-12);
        assert!((model.bias[1] - b).abs() < 1e-12);
    }

    #[test]
    fn heavy_regularization_falls_back_to_class_frequency() {
        let x = dense(vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.0, 5.0], vec![2.0, 2.0]]);
        let y = [1, 1, 1, 0];
        let model = RidgeClassifier::fit(&x, &y, 2, 1e12, RidgeSolver::Auto).unwrap();
        assert!(model.weights.as_slice().iter().all(|w| w.abs() < 1e-9));
        assert!((model.bias[1] - 0.5).abs() < 1e-9);
        assert!((model.bias[0] + 0.5).abs() < 1e-9);
        assert_eq!(model.predict(&x).unwrap(), vec![1; 4]);
    }

    #[test]
    fn deterministic() {
        let x = dense(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let a = RidgeClassifier::fit(&x, &[0, 1, 2], 3, 1.0, RidgeSolver::Auto).unwrap();
        let b = RidgeClassifier::fit(&x, &[0, 1, 2], 3, 1.0, RidgeSolver::Auto).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_alpha() {
        let x = dense(vec![vec![1.0]]);
        assert!(RidgeClassifier::fit(&x, &[0], 2, 0.0, RidgeSolver::Auto).is_err());
    }

    fn random_sparse(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
        let mut m = CsrMatrix::new(d);
        for _ in 0..n {
            let mut entries: Vec<(u32, f64)> = Vec::new();
            for j in 0..d as u32 {
                if rng.random_bool(0.4) {
                    entries.push((j, rng.sample::<f64, _>(StandardNormal)));
                }
            }
            m.push_row(entries).unwrap();
        }
        FeatureMatrix::Sparse(m)
    }

    #[test]
    fn solvers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for &(n, d) in &[(30, 8), (8, 30), (25, 25)] {
            let x = random_sparse(&mut rng, n, d);
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let fits: Vec<RidgeClassifier> = [RidgeSolver::Primal, RidgeSolver::Dual, RidgeSolver::ConjugateGradient]
                .iter()
                .map(|&s| RidgeClassifier::fit(&x, &y, 3, 0.5, s).unwrap())
                .collect();
            let reference = &fits[0];
            let scale = reference.weights.as_slice().iter().fold(0.0f64, |m, w| m.max(w.abs()));
            for other in &fits[1..] {
                for (a, b) in reference.weights.as_slice().iter().zip(other.weights.as_slice()) {
                    assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
                }
                for (a, b) in reference.bias.iter().zip(&other.bias) {
                    assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
                }
            }
        }
    }
}
