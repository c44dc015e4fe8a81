use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMode, KmerSpec, MAX_K};
use crate::ingest::{ClassLevel, SplitSpec};
use crate::linear_models::RidgeSolver;
use crate::model::{Hyperparameters, ModelKind};
use crate::rff::DEFAULT_OUTPUT_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingChoice {
    #[default]
    Kmers,
    Ohe,
}

impl fmt::Display for EncodingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Kmers => "kmers",
            Self::Ohe => "ohe",
        })
    }
}

impl FromStr for EncodingChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmers" | "kmer" => Ok(Self::Kmers),
            "ohe" | "onehot" | "one-hot" => Ok(Self::Ohe),
            _ => Err(Error::InvalidConfig(format!("unknown encoding {s:?} (kmers, ohe)"))),
        }
    }
}

/// Everything one experiment needs. Read from a flat `key = value` file;
/// every key can also be set from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub fasta: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    /// A corpus written by `ingest`; used instead of fasta + metadata.
    pub corpus: Option<PathBuf>,
    pub class_level: ClassLevel,
    pub encoding: EncodingChoice,
    pub k: usize,
    pub normalize: bool,
    /// `None`: on for NB, LR and ridge, off for MAJORITY and NN.
    pub use_rff: Option<bool>,
    pub rff_dim: usize,
    /// `None`: `1 / input_dim`.
    pub rff_gamma: Option<f64>,
    /// `None`: the run seed.
    pub rff_seed: Option<u64>,
    pub model: ModelKind,
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
    pub runs: usize,
    pub parallel_runs: bool,
    pub output_dir: PathBuf,
    pub save_models: bool,
    pub hyperparameters: Hyperparameters,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fasta: None,
            metadata: None,
            corpus: None,
            class_level: ClassLevel::Continent,
            encoding: EncodingChoice::Kmers,
            k: 3,
            normalize: false,
            use_rff: None,
            rff_dim: DEFAULT_OUTPUT_DIM,
            rff_gamma: None,
            rff_seed: None,
            model: ModelKind::Lr,
            train_fraction: 0.10,
            stratified: true,
            seed: 0,
            runs: 5,
            parallel_runs: false,
            output_dir: PathBuf::from("out"),
            save_models: false,
            hyperparameters: Hyperparameters::default(),
        }
    }
}

/// Keys accepted by [`ExperimentConfig::set`], in file order.
pub const KEYS: &[&str] = &[
    "fasta",
    "metadata",
    "corpus",
    "class_level",
    "encoding",
    "k",
    "normalize",
    "use_rff",
    "rff_dim",
    "rff_gamma",
    "rff_seed",
    "model",
    "train_fraction",
    "stratified",
    "seed",
    "runs",
    "parallel_runs",
    "output_dir",
    "save_models",
    "lr_lambda",
    "lr_max_iters",
    "lr_tol",
    "ridge_alpha",
    "ridge_solver",
    "nn_hidden_width",
    "nn_batch_size",
    "nn_epochs",
    "nn_learning_rate",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// `auto` (or an empty value) maps to `None`.
fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_solver(value: &str) -> Result<RidgeSolver> {
    match value.to_ascii_lowercase().as_str() {
        "auto" => Ok(RidgeSolver::Auto),
        "primal" => Ok(RidgeSolver::Primal),
        "dual" => Ok(RidgeSolver::Dual),
        "cg" | "conjugate_gradient" => Ok(RidgeSolver::ConjugateGradient),
        _ => Err(Error::InvalidConfig(format!("ridge_solver: unknown solver {value:?}"))),
    }
}

fn solver_name(s: RidgeSolver) -> &'static str {
    match s {
        RidgeSolver::Auto => "auto",
        RidgeSolver::Primal => "primal",
        RidgeSolver::Dual => "dual",
        RidgeSolver::ConjugateGradient => "cg",
    }
}

fn auto<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

impl ExperimentConfig {
    /// Parses a flat config file: one `key = value` per line, `#` starts a
    /// comment. Unset keys keep their defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!("line {}: expected key = value", n + 1)));
            };
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", n + 1)))?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let h = &mut self.hyperparameters;
        match key {
            "fasta" => self.fasta = Some(value.into()),
            "metadata" => self.metadata = Some(value.into()),
            "corpus" => self.corpus = Some(value.into()),
            "class_level" => self.class_level = parse(key, value)?,
            "encoding" => self.encoding = value.parse()?,
            "k" => self.k = parse(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            "use_rff" => {
                self.use_rff = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse_bool(key, value)?)
                }
            }
            "rff_dim" => self.rff_dim = parse(key, value)?,
            "rff_gamma" => self.rff_gamma = parse_auto(key, value)?,
            "rff_seed" => self.rff_seed = parse_auto(key, value)?,
            "model" => self.model = value.parse()?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "stratified" => self.stratified = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "runs" => self.runs = parse(key, value)?,
            "parallel_runs" => self.parallel_runs = parse_bool(key, value)?,
            "output_dir" => self.output_dir = value.into(),
            "save_models" => self.save_models = parse_bool(key, value)?,
            "lr_lambda" => h.lr.l2_lambda = parse(key, value)?,
            "lr_max_iters" => h.lr.max_iters = parse(key, value)?,
            "lr_tol" => h.lr.tol = parse(key, value)?,
            "ridge_alpha" => h.ridge_alpha = parse(key, value)?,
            "ridge_solver" => h.ridge_solver = parse_solver(value)?,
            "nn_hidden_width" => h.nn_hidden_width = parse_auto(key, value)?,
            "nn_batch_size" => h.nn_batch_size = parse(key, value)?,
            "nn_epochs" => h.nn_epochs = parse(key, value)?,
            "nn_learning_rate" => h.nn_adam.learning_rate = parse(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// The config as a flat file that [`from_kv_str`](Self::from_kv_str) reads back.
    pub fn to_kv_string(&self) -> String {
        let h = &self.hyperparameters;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let values: Vec<(&str, Option<String>)> = vec![
            ("fasta", path(&self.fasta)),
            ("metadata", path(&self.metadata)),
            ("corpus", path(&self.corpus)),
            ("class_level", Some(self.class_level.to_string())),
            ("encoding", Some(self.encoding.to_string())),
            ("k", Some(self.k.to_string())),
            ("normalize", Some(self.normalize.to_string())),
            ("use_rff", Some(auto(self.use_rff))),
            ("rff_dim", Some(self.rff_dim.to_string())),
            ("rff_gamma", Some(auto(self.rff_gamma))),
            ("rff_seed", Some(auto(self.rff_seed))),
            ("model", Some(self.model.to_string())),
            ("train_fraction", Some(self.train_fraction.to_string())),
            ("stratified", Some(self.stratified.to_string())),
            ("seed", Some(self.seed.to_string())),
            ("runs", Some(self.runs.to_string())),
            ("parallel_runs", Some(self.parallel_runs.to_string())),
            ("output_dir", Some(self.output_dir.display().to_string())),
            ("save_models", Some(self.save_models.to_string())),
            ("lr_lambda", Some(h.lr.l2_lambda.to_string())),
            ("lr_max_iters", Some(h.lr.max_iters.to_string())),
            ("lr_tol", Some(h.lr.tol.to_string())),
            ("ridge_alpha", Some(h.ridge_alpha.to_string())),
            ("ridge_solver", Some(solver_name(h.ridge_solver).to_string())),
            ("nn_hidden_width", Some(auto(h.nn_hidden_width))),
            ("nn_batch_size", Some(h.nn_batch_size.to_string())),
            ("nn_epochs", Some(h.nn_epochs.to_string())),
            ("nn_learning_rate", Some(h.nn_adam.learning_rate.to_string())),
        ];
        values
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| format!("{k} = {v}\n")))
            .collect()
    }

    pub fn rff_enabled(&self) -> bool {
        self.use_rff
            .unwrap_or(matches!(self.model, ModelKind::Nb | ModelKind::Lr | ModelKind::Ridge))
    }

    /// Pins every `auto` that does not depend on the data.
    pub fn resolved(&self) -> Self {
        Self {
            use_rff: Some(self.rff_enabled()),
            ..self.clone()
        }
    }

    pub fn feature_mode(&self) -> Result<FeatureMode> {
        Ok(match self.encoding {
            EncodingChoice::Kmers => FeatureMode::Kmers(KmerSpec {
                normalize: self.normalize,
                ..KmerSpec::new(self.k)?
            }),
            EncodingChoice::Ohe => FeatureMode::OneHot { expected_len: None },
        })
    }

    pub fn split_spec(&self, run: usize) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.run_seed(run),
            stratified: self.stratified,
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }

    pub fn rff_seed_for(&self, run: usize) -> u64 {
        self.rff_seed.unwrap_or(self.seed).wrapping_add(run as u64)
    }

    /// Row label for report tables, e.g. `k-mers+RFF`.
    pub fn embedding_label(&self) -> String {
        let base = match self.encoding {
            EncodingChoice::Kmers => format!("{}-mers", self.k),
            EncodingChoice::Ohe => "OHE".to_string(),
        };
        if self.rff_enabled() {
            format!("{base}+RFF")
        } else {
            base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.corpus.is_none() && (self.fasta.is_none() || self.metadata.is_none()) {
            return bad("set corpus, or both fasta and metadata".into());
        }
        if self.encoding == EncodingChoice::Kmers && !(1..=MAX_K).contains(&self.k) {
            return bad(format!("k must lie in 1..={MAX_K}, got {}", self.k));
        }
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.rff_enabled() && self.rff_dim == 0 {
            return bad("rff_dim must be >= 1".into());
        }
        if let Some(g) = self.rff_gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidGamma(g));
            }
        }
        let h = &self.hyperparameters;
        if !(h.ridge_alpha > 0.0 && h.ridge_alpha.is_finite()) {
            return bad(format!("ridge_alpha must be > 0, got {}", h.ridge_alpha));
        }
        if !(h.lr.l2_lambda >= 0.0 && h.lr.tol > 0.0 && h.lr.max_iters > 0) {
            return bad("lr_lambda must be >= 0, lr_tol > 0 and lr_max_iters >= 1".into());
        }
        if h.nn_hidden_width == Some(0) || h.nn_batch_size == 0 || h.nn_epochs == 0 {
            return bad("nn_hidden_width, nn_batch_size and nn_epochs must be >= 1".into());
        }
        if !(h.nn_adam.learning_rate > 0.0) {
            return bad("nn_learning_rate must be > 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut c = ExperimentConfig::default();
        c.set("corpus", "data/c.sqc").unwrap();
        c.set("model", "nn").unwrap();
        c.set("nn_hidden_width", "64").unwrap();
        c.set("rff_gamma", "0.5").unwrap();
        c.set("ridge_solver", "cg").unwrap();
        c.set("class_level", "country").unwrap();
        let text = c.to_kv_string();
        assert_eq!(ExperimentConfig::from_kv_str(&text).unwrap(), c);
    }

    #[test]
    fn comments_and_errors() {
        let c = ExperimentConfig::from_kv_str("# experiment\n\nmodel = ridge  # baseline\nruns=1\n").unwrap();
        assert_eq!(c.model, ModelKind::Ridge);
        assert_eq!(c.runs, 1);
        assert!(ExperimentConfig::from_kv_str("nonsense").is_err());
        assert!(ExperimentConfig::from_kv_str("colour = red").is_err());
        let e = ExperimentConfig::from_kv_str("runs = many").unwrap_err();
        assert!(e.to_string().contains("line 1"));
    }

    #[test]
    fn rff_defaults_follow_the_model() {
        let mut c = ExperimentConfig::default();
        for (model, expected) in [("nb", true), ("lr", true), ("ridge", true), ("nn", false), ("majority", false)] {
            c.set("model", model).unwrap();
            assert_eq!(c.rff_enabled(), expected, "{model}");
        }
        c.set("use_rff", "true").unwrap();
        assert!(c.rff_enabled());
        assert_eq!(c.embedding_label(), "3-mers+RFF");
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_err());
        c.set("corpus", "x").unwrap();
        c.validate().unwrap();
        c.set("k", "9").unwrap();
        assert!(c.validate().is_err());
        c.set("k", "3").unwrap();
        c.set("runs", "0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn run_seeds_are_consecutive() {
        let mut c = ExperimentConfig::default();
        c.set("seed", "40").unwrap();
        assert_eq!((0..3).map(|i| c.run_seed(i)).collect::<Vec<_>>(), vec![40, 41, 42]);
        c.set("rff_seed", "7").unwrap();
        assert_eq!(c.rff_seed_for(2), 9);
    }
}
