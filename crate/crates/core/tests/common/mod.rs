//! Synthetic corpora shared by the integration suites.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqclass::alphabet;
use seqclass::ingest::{LabelHierarchy, LabeledSequence, SequenceRecord};

pub fn labeled(id: &str, residues: &str, class: &str) -> LabeledSequence {
    LabeledSequence {
        record: SequenceRecord::new(id, residues).unwrap(),
        label: LabelHierarchy {
            continent: class.to_string(),
            country: format!("{class}-land"),
            state: None,
        },
    }
}

pub fn random_residues(rng: &mut impl Rng, len: usize) -> String {
    (0..len)
        .map(|_| alphabet::symbol(rng.random_range(0..alphabet::SIZE)) as char)
        .collect()
}

pub fn class_name(c: usize) -> String {
    format!("class{c:02}")
}

/// Class sizes for `n` items where class 0 holds `share` of the data and the
/// rest is spread as evenly as possible over the other classes.
pub fn majority_sizes(n: usize, classes: usize, share: f64) -> Vec<usize> {
    let major = (share * n as f64).round() as usize;
    let rest = n - major;
    let others = classes - 1;
    let mut sizes = vec![major];
    sizes.extend((0..others).map(|i| rest / others + usize::from(i < rest % others)));
    sizes
}

/// Random sequences with labels drawn to the exact class sizes, shuffled.
pub fn sized_corpus(sizes: &[usize], len: usize, seed: u64) -> Vec<LabeledSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng);
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| labeled(&format!("seq{i}"), &random_residues(&mut rng, len), &class_name(c)))
        .collect()
}

/// Each class owns `motifs_per_class` distinct 3-mers. A sequence is random
/// background with `motifs_per_seq` of its class's motifs written at random
/// positions.
pub fn motif_corpus(
    n: usize,
    shares: &[f64],
    motifs_per_class: usize,
    motifs_per_seq: usize,
    len: usize,
    seed: u64,
) -> Vec<LabeledSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..alphabet::SIZE.pow(3)).collect();
    pool.shuffle(&mut rng);
    let motifs: Vec<Vec<String>> = (0..shares.len())
        .map(|c| {
            pool[c * motifs_per_class..(c + 1) * motifs_per_class]
                .iter()
                .map(|&i| seqclass::features::kmer_from_index(i, 3))
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut class = shares.len() - 1;
            for (c, &s) in shares.iter().enumerate() {
                acc += s;
                if u < acc {
                    class = c;
                    break;
                }
            }
            let mut seq: Vec<u8> = random_residues(&mut rng, len).into_bytes();
            for _ in 0..motifs_per_seq {
                let m = motifs[class][rng.random_range(0..motifs_per_class)].as_bytes();
                let p = rng.random_range(0..=len - 3);
                seq[p..p + 3].copy_from_slice(m);
            }
            labeled(&format!("m{i}"), &String::from_utf8(seq).unwrap(), &class_name(class))
        })
        .collect()
}

pub mod gradcheck {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use seqclass::linalg::DenseMatrix;
    use seqclass::linear_models::{logreg_loss, logreg_loss_and_grad, LogisticParams};
    use seqclass::neural_net::{FeedForwardNet, NetConfig};
    use seqclass::sparse::FeatureMatrix;

    const EPS: f64 = 1e-6;

    /// `||a - b|| / max(||a||, ||b||)`, or 0 when both vanish.
    pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale = seqclass::linalg::norm(a).max(seqclass::linalg::norm(b));
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize, c: usize) -> (FeatureMatrix, Vec<usize>) {
        let x = DenseMatrix::from_vec(n, d, gaussian(rng, n * d)).unwrap();
        let y = (0..n).map(|_| rng.random_range(0..c)).collect();
        (FeatureMatrix::Dense(x), y)
    }

    fn central_difference(params: &mut [f64], mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        (0..params.len())
            .map(|i| {
                let keep = params[i];
                params[i] = keep + EPS;
                let up = loss(params);
                params[i] = keep - EPS;
                let down = loss(params);
                params[i] = keep;
                (up - down) / (2.0 * EPS)
            })
            .collect()
    }

    /// Worst relative error over the four parameter tensors of a random
    /// tiny network (d <= 5, h <= 4, C <= 3, n <= 10).
    pub fn nn_instance(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=5);
        let h = rng.random_range(1..=4);
        let c = rng.random_range(2..=3);
        let n = rng.random_range(1..=10);
        let (x, y) = random_data(&mut rng, n, d, c);
        let config = NetConfig { hidden_width: h, ..NetConfig::new(d, c, seed) };
        let mut net = FeedForwardNet::init(&config).unwrap();
        net.b1 = gaussian(&mut rng, h).iter().map(|v| 0.5 * v).collect();
        net.b2 = gaussian(&mut rng, c).iter().map(|v| 0.5 * v).collect();
        let rows: Vec<usize> = (0..n).collect();
        let (_, grads) = net.loss_and_gradients(&x, &y, &rows).unwrap();

        let loss_with = |net: &FeedForwardNet| net.loss_and_gradients(&x, &y, &rows).unwrap().0;
        let mut worst: f64 = 0.0;
        for (tensor, analytic) in [(0, &grads.w1), (1, &grads.b1), (2, &grads.w2), (3, &grads.b2)] {
            let mut probe = net.clone();
            let mut params = match tensor {
                0 => net.w1.clone(),
                1 => net.b1.clone(),
                2 => net.w2.clone(),
                _ => net.b2.clone(),
            };
            let numeric = central_difference(&mut params, |p| {
                match tensor {
                    0 => probe.w1.copy_from_slice(p),
                    1 => probe.b1.copy_from_slice(p),
                    2 => probe.w2.copy_from_slice(p),
                    _ => probe.b2.copy_from_slice(p),
                }
                loss_with(&probe)
            });
            worst = worst.max(relative_error(analytic, &numeric));
        }
        worst
    }

    /// Relative error of the logistic-regression gradient on a random small
    /// instance (n <= 20, d <= 5).
    pub fn logreg_instance(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=5);
        let c = rng.random_range(2..=4);
        let n = rng.random_range(1..=20);
        let lambda = if rng.random_bool(0.5) { 1e-4 } else { 0.3 };
        let (x, y) = random_data(&mut rng, n, d, c);
        let params = LogisticParams {
            weights: DenseMatrix::from_vec(c, d, gaussian(&mut rng, c * d)).unwrap(),
            bias: gaussian(&mut rng, c),
        };
        let (_, grad) = logreg_loss_and_grad(&x, &y, &params, lambda);
        let mut flat: Vec<f64> = params.weights.as_slice().to_vec();
        flat.extend(&params.bias);
        let numeric = central_difference(&mut flat, |p| {
            let probe = LogisticParams {
                weights: DenseMatrix::from_vec(c, d, p[..c * d].to_vec()).unwrap(),
                bias: p[c * d..].to_vec(),
            };
            logreg_loss(&x, &y, &probe, lambda)
        });
        let mut analytic = grad.weights.as_slice().to_vec();
        analytic.extend(&grad.bias);
        relative_error(&analytic, &numeric)
    }
}
