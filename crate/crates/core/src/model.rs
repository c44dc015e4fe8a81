//! A fitted classifier of any supported kind, with hyperparameters,
//! binary serialization and a JSON summary.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::linear_models::{
    Classifier, GaussianNb, LogisticParams, LogisticRegression, LogisticRegressionConfig, Majority, RidgeClassifier,
    RidgeSolver,
};
use crate::neural_net::{self, AdamConfig, FeedForwardNet, NetConfig};
use crate::sparse::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Majority,
    Nb,
    Lr,
    Ridge,
    Nn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [Self::Majority, Self::Nb, Self::Lr, Self::Ridge, Self::Nn];

    pub fn name(self) -> &'static str {
        match self {
            Self::Majority => "majority",
            Self::Nb => "nb",
            Self::Lr => "lr",
            Self::Ridge => "ridge",
            Self::Nn => "nn",
        }
    }

    /// Label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Majority => "MAJORITY",
            Self::Nb => "NB",
            Self::Lr => "LR",
            Self::Ridge => "RC",
            Self::Nn => "NN",
        }
    }

    fn tag(self) -> u8 {
        self as u8
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model {s:?} (majority, nb, lr, ridge, nn)")))
    }
}

/// Hyperparameters for every model kind; only the chosen kind's are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lr: LogisticRegressionConfig,
    pub ridge_alpha: f64,
    pub ridge_solver: RidgeSolver,
    /// `None` means equal to the input dimension.
    pub nn_hidden_width: Option<usize>,
    pub nn_batch_size: usize,
    pub nn_epochs: usize,
    pub nn_adam: AdamConfig,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            lr: LogisticRegressionConfig::default(),
            ridge_alpha: 1.0,
            ridge_solver: RidgeSolver::Auto,
            nn_hidden_width: None,
            nn_batch_size: 100,
            nn_epochs: 10,
            nn_adam: AdamConfig::default(),
        }
    }
}

impl Hyperparameters {
    pub fn net_config(&self, input_dim: usize, class_count: usize, seed: u64) -> NetConfig {
        NetConfig {
            hidden_width: self.nn_hidden_width.unwrap_or(input_dim),
            batch_size: self.nn_batch_size,
            epochs: self.nn_epochs,
            adam: self.nn_adam,
            ..NetConfig::new(input_dim, class_count, seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Majority(Majority),
    Nb(GaussianNb),
    Lr(LogisticRegression),
    Ridge(RidgeClassifier),
    Nn { net: FeedForwardNet, config: NetConfig, loss_trace: Vec<f64> },
}

impl TrainedModel {
    pub fn fit(
        kind: ModelKind,
        x: &FeatureMatrix,
        y: &[usize],
        class_count: usize,
        hyper: &Hyperparameters,
        seed: u64,
    ) -> Result<Self> {
        Ok(match kind {
            ModelKind::Majority => Self::Majority(Majority::fit(y, class_count, x.ncols())?),
            ModelKind::Nb => Self::Nb(GaussianNb::fit(x, y, class_count)?),
            ModelKind::Lr => {
                let config = LogisticRegressionConfig { seed, ..hyper.lr };
                Self::Lr(LogisticRegression::fit(x, y, class_count, config)?)
            }
            ModelKind::Ridge => Self::Ridge(RidgeClassifier::fit(x, y, class_count, hyper.ridge_alpha, hyper.ridge_solver)?),
            ModelKind::Nn => {
                let config = hyper.net_config(x.ncols(), class_count, seed);
                let (net, loss_trace) = FeedForwardNet::train(&config, x, y)?;
                Self::Nn { net, config, loss_trace }
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Majority(_) => ModelKind::Majority,
            Self::Nb(_) => ModelKind::Nb,
            Self::Lr(_) => ModelKind::Lr,
            Self::Ridge(_) => ModelKind::Ridge,
            Self::Nn { .. } => ModelKind::Nn,
        }
    }

    fn classifier(&self) -> &dyn Classifier {
        match self {
            Self::Majority(m) => m,
            Self::Nb(m) => m,
            Self::Lr(m) => m,
            Self::Ridge(m) => m,
            Self::Nn { net, .. } => net,
        }
    }

    pub fn loss_trace(&self) -> &[f64] {
        match self {
            Self::Lr(m) => &m.loss_trace,
            Self::Nn { loss_trace, .. } => loss_trace,
            _ => &[],
        }
    }

    pub fn summary(&self) -> ModelSummary {
        let hyperparameters = match self {
            Self::Majority(m) => serde_json::json!({ "majority_class": m.majority_class }),
            Self::Nb(m) => serde_json::json!({
                "var_smoothing": crate::linear_models::VAR_SMOOTHING,
                "epsilon": m.epsilon,
            }),
            Self::Lr(m) => serde_json::json!({
                "l2_lambda": m.config.l2_lambda,
                "max_iters": m.config.max_iters,
                "tol": m.config.tol,
                "iterations": m.iterations,
            }),
            Self::Ridge(m) => serde_json::json!({ "alpha": m.alpha, "solver": m.solver }),
            Self::Nn { config, .. } => serde_json::to_value(config).expect("config serializes"),
        };
        ModelSummary {
            format: ModelSummary::FORMAT.into(),
            version: ModelSummary::VERSION,
            model: self.kind(),
            input_dim: self.input_dim(),
            class_count: self.class_count(),
            hyperparameters,
            loss_trace: self.loss_trace().to_vec(),
        }
    }

    const MAGIC: &'static [u8] = b"SQMD";
    const VERSION: u32 = 1;

    /// Binary model: magic `SQMD`, version, model tag, `input_dim`,
    /// `class_count`, then the kind-specific hyperparameters and weights.
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut enc = Encoder::new(out);
        enc.magic(Self::MAGIC)?;
        enc.u32(Self::VERSION)?;
        enc.u8(self.kind().tag())?;
        enc.usize(self.input_dim())?;
        enc.usize(self.class_count())?;
        match self {
            Self::Majority(m) => enc.usize(m.majority_class)?,
            Self::Nb(m) => {
                enc.f64(m.epsilon)?;
                enc.f64s(&m.priors)?;
                write_matrix(&mut enc, &m.means)?;
                write_matrix(&mut enc, &m.variances)?;
            }
            Self::Lr(m) => {
                enc.f64(m.config.l2_lambda)?;
                enc.usize(m.config.max_iters)?;
                enc.f64(m.config.tol)?;
                enc.u64(m.config.seed)?;
                enc.usize(m.iterations)?;
                enc.f64s(&m.loss_trace)?;
                write_matrix(&mut enc, &m.params.weights)?;
                enc.f64s(&m.params.bias)?;
            }
            Self::Ridge(m) => {
                enc.f64(m.alpha)?;
                enc.u8(solver_tag(m.solver))?;
                write_matrix(&mut enc, &m.weights)?;
                enc.f64s(&m.bias)?;
            }
            Self::Nn { net, config, loss_trace } => {
                neural_net::write_config(&mut enc, config)?;
                enc.f64s(loss_trace)?;
                for t in [&net.w1, &net.b1, &net.w2, &net.b2] {
                    enc.f64s(t)?;
                }
            }
        }
        enc.finish()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut dec = Decoder::new(input, "model");
        dec.expect_magic(Self::MAGIC)?;
        let version = dec.u32()?;
        if version != Self::VERSION {
            return dec.fail(format!("unsupported version {version}"));
        }
        let tag = dec.u8()?;
        let Some(kind) = ModelKind::from_tag(tag) else {
            return dec.fail(format!("unknown model tag {tag}"));
        };
        let input_dim = dec.usize()?;
        let class_count = dec.usize()?;
        let model = match kind {
            ModelKind::Majority => {
                let majority_class = dec.usize()?;
                if majority_class >= class_count {
                    return dec.fail("majority class out of range");
                }
                Self::Majority(Majority { majority_class, class_count, input_dim })
            }
            ModelKind::Nb => {
                let epsilon = dec.f64()?;
                let priors = dec.f64s()?;
                let means = read_matrix(&mut dec)?;
                let variances = read_matrix(&mut dec)?;
                Self::Nb(GaussianNb::from_parts(priors, means, variances, epsilon))
            }
            ModelKind::Lr => {
                let config = LogisticRegressionConfig {
                    l2_lambda: dec.f64()?,
                    max_iters: dec.usize()?,
                    tol: dec.f64()?,
                    seed: dec.u64()?,
                };
                let iterations = dec.usize()?;
                let loss_trace = dec.f64s()?;
                let weights = read_matrix(&mut dec)?;
                let bias = dec.f64s()?;
                Self::Lr(LogisticRegression {
                    params: LogisticParams { weights, bias },
                    config,
                    loss_trace,
                    iterations,
                })
            }
            ModelKind::Ridge => {
                let alpha = dec.f64()?;
                let tag = dec.u8()?;
                let Some(solver) = solver_from_tag(tag) else {
                    return dec.fail(format!("unknown ridge solver tag {tag}"));
                };
                let weights = read_matrix(&mut dec)?;
                let bias = dec.f64s()?;
                Self::Ridge(RidgeClassifier { alpha, weights, bias, solver })
            }
            ModelKind::Nn => {
                let config = neural_net::read_config(&mut dec)?;
                let loss_trace = dec.f64s()?;
                let net = FeedForwardNet {
                    input_dim: config.input_dim,
                    hidden_width: config.hidden_width,
                    class_count: config.class_count,
                    w1: dec.f64s()?,
                    b1: dec.f64s()?,
                    w2: dec.f64s()?,
                    b2: dec.f64s()?,
                };
                let (d, h, c) = (config.input_dim, config.hidden_width, config.class_count);
                if [net.w1.len(), net.b1.len(), net.w2.len(), net.b2.len()] != [d * h, h, c * h, c] {
                    return dec.fail("tensor shapes do not match the config");
                }
                Self::Nn { net, config, loss_trace }
            }
        };
        if model.input_dim() != input_dim || model.class_count() != class_count {
            return dec.fail("weights do not match the declared dimensions");
        }
        Ok(model)
    }
}

impl Classifier for TrainedModel {
    fn class_count(&self) -> usize {
        self.classifier().class_count()
    }

    fn input_dim(&self) -> usize {
        self.classifier().input_dim()
    }

    fn scores(&self, x: &FeatureMatrix) -> Result<DenseMatrix> {
        self.classifier().scores(x)
    }
}

fn write_matrix<W: Write>(enc: &mut Encoder<W>, m: &DenseMatrix) -> Result<()> {
    enc.usize(m.nrows())?;
    enc.usize(m.ncols())?;
    enc.f64s(m.as_slice())
}

fn read_matrix<R: Read>(dec: &mut Decoder<R>) -> Result<DenseMatrix> {
    let rows = dec.usize()?;
    let cols = dec.usize()?;
    let data = dec.f64s()?;
    match DenseMatrix::from_vec(rows, cols, data) {
        Ok(m) => Ok(m),
        Err(_) => dec.fail("matrix data does not match its shape"),
    }
}

fn solver_tag(s: RidgeSolver) -> u8 {
    match s {
        RidgeSolver::Auto => 0,
        RidgeSolver::Primal => 1,
        RidgeSolver::Dual => 2,
        RidgeSolver::ConjugateGradient => 3,
    }
}

fn solver_from_tag(tag: u8) -> Option<RidgeSolver> {
    [RidgeSolver::Auto, RidgeSolver::Primal, RidgeSolver::Dual, RidgeSolver::ConjugateGradient]
        .get(tag as usize)
        .copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub format: String,
    pub version: u32,
    pub model: ModelKind,
    pub input_dim: usize,
    pub class_count: usize,
    pub hyperparameters: serde_json::Value,
    pub loss_trace: Vec<f64>,
}

impl ModelSummary {
    pub const FORMAT: &'static str = "seqclass-model";
    pub const VERSION: u32 = 1;
}

/// CSV with header `step,loss`, steps counted from 1.
pub fn write_loss_trace<W: Write>(out: W, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::format("loss trace CSV", e.to_string());
    w.write_record(["step", "loss"]).map_err(err)?;
    for (i, loss) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), loss.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("writing loss trace", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    fn toy() -> (FeatureMatrix, Vec<usize>) {
        let mut m = CsrMatrix::new(3);
        let rows: [&[(u32, f64)]; 6] = [
            &[(0, 2.0)],
            &[(0, 1.5), (2, 0.1)],
            &[(1, 2.0)],
            &[(1, 1.0), (2, 0.3)],
            &[(2, 2.0)],
            &[(0, 0.2), (2, 1.8)],
        ];
        for r in rows {
            m.push_row(r.iter().copied()).unwrap();
        }
        (FeatureMatrix::Sparse(m), vec![0, 0, 1, 1, 2, 2])
    }

    #[test]
    fn every_kind_round_trips() {
        let (x, y) = toy();
        let hyper = Hyperparameters { nn_batch_size: 2, ..Hyperparameters::default() };
        for kind in ModelKind::ALL {
            let model = TrainedModel::fit(kind, &x, &y, 3, &hyper, 4).unwrap();
            assert_eq!(model.kind(), kind);
            let mut buf = Vec::new();
            model.write(&mut buf).unwrap();
            let back = TrainedModel::read(buf.as_slice()).unwrap();
            assert_eq!(back, model, "{kind}");
            assert_eq!(back.scores(&x).unwrap(), model.scores(&x).unwrap());
            let summary = model.summary();
            assert_eq!(summary.model, kind);
            let json = serde_json::to_string(&summary).unwrap();
            assert_eq!(serde_json::from_str::<ModelSummary>(&json).unwrap(), summary);
        }
    }

    #[test]
    fn corrupt_blobs_are_rejected() {
        let (x, y) = toy();
        let model = TrainedModel::fit(ModelKind::Ridge, &x, &y, 3, &Hyperparameters::default(), 0).unwrap();
        let mut buf = Vec::new();
        model.write(&mut buf).unwrap();
        assert!(TrainedModel::read(&buf[..buf.len() - 3]).is_err());
        let mut bad_tag = buf.clone();
        bad_tag[8] = 99;
        assert!(TrainedModel::read(bad_tag.as_slice()).is_err());
        assert!(TrainedModel::read(&b"NOPE"[..]).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("NN".parse::<ModelKind>().unwrap(), ModelKind::Nn);
        assert_eq!("ridge".parse::<ModelKind>().unwrap(), ModelKind::Ridge);
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn loss_trace_csv() {
        let mut buf = Vec::new();
        write_loss_trace(&mut buf, &[0.5, 0.25]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,loss\n1,0.5\n2,0.25\n");
    }
}
