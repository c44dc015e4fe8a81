use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed FASTA at line {line}: {reason}")]
    MalformedFasta { line: usize, reason: String },

    #[error("invalid residue {residue:?} in record {id:?} at position {position}")]
    InvalidResidue {
        id: String,
        position: usize,
        residue: char,
    },

    #[error("duplicate record id {0:?}")]
    DuplicateId(String),

    #[error("duplicate metadata key {0:?}")]
    DuplicateMetadataKey(String),

    #[error("malformed metadata at line {line}: {reason}")]
    MalformedMetadata { line: usize, reason: String },

    #[error("no record matched the metadata table")]
    EmptyJoin,

    #[error("class {class:?} has a single member; stratified split needs at least 2")]
    ClassTooSmall { class: String },

    #[error("record {id:?} has no {level} label")]
    MissingLabel { id: String, level: String },

    #[error("sequence {id:?} has {len} residues, shorter than k = {k}")]
    SequenceTooShort { id: String, len: usize, k: usize },

    #[error("sequence {id:?} has {actual} residues, expected {expected}")]
    LengthMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },

    #[error("k = {0} is outside 1..=6")]
    InvalidK(usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("training labels contain a single class; at least 2 are required")]
    DegenerateLabels,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("all samples belong to one class; ROC-AUC is undefined")]
    DegenerateClass,

    #[error("no runs to aggregate")]
    EmptyRuns,

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("sequences have ragged lengths: {0:?}")]
    RaggedLengths(Vec<String>),

    #[error("information gain needs at least 2 classes")]
    SingleClass,

    #[error("bad {format} file: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidK(_)
            | Error::InvalidDimension(_)
            | Error::InvalidGamma(_)
            | Error::InvalidConfig(_) => ErrorClass::Config,
            Error::NonFiniteLoss { .. } => ErrorClass::Numerical,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}

impl From<io::Error> for Error {
    fn from(source: io::Error) -> Self {
        Error::io("I/O failure", source)
    }
}
