//! k-mer count vectors and one-hot encodings over the 21-letter alphabet.

use std::io::{Read, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet;
use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::ingest::{ClassLevel, LabeledSequence};
use crate::sparse::{CsrMatrix, FeatureMatrix, RowView};

pub const MAX_K: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmerSpec {
    pub k: usize,
    /// Scale each count vector to unit L2 norm.
    #[serde(default)]
    pub normalize: bool,
}

impl KmerSpec {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=MAX_K).contains(&k) {
            return Err(Error::InvalidK(k));
        }
        Ok(Self { k, normalize: false })
    }

    pub fn dim(&self) -> usize {
        alphabet::SIZE.pow(self.k as u32)
    }
}

impl Default for KmerSpec {
    fn default() -> Self {
        Self { k: 3, normalize: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    KmerCounts,
    OneHot,
    Rff,
}

impl Encoding {
    fn tag(self) -> u8 {
        match self {
            Encoding::KmerCounts => 0,
            Encoding::OneHot => 1,
            Encoding::Rff => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Encoding::KmerCounts),
            1 => Some(Encoding::OneHot),
            2 => Some(Encoding::Rff),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Sparse { indices: Vec<u32>, values: Vec<f64> },
    Dense(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub encoding: Encoding,
    pub dim: usize,
    pub values: Values,
}

impl FeatureVector {
    pub fn view(&self) -> RowView<'_> {
        match &self.values {
            Values::Sparse { indices, values } => RowView::Sparse { indices, values },
            Values::Dense(v) => RowView::Dense(v),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.view().to_dense(self.dim)
    }

    pub fn sum(&self) -> f64 {
        self.view().iter().map(|(_, v)| v).sum()
    }

    /// Value at `index` (0 when absent).
    pub fn get(&self, index: usize) -> f64 {
        match &self.values {
            Values::Sparse { indices, values } => indices
                .binary_search(&(index as u32))
                .map_or(0.0, |p| values[p]),
            Values::Dense(v) => v[index],
        }
    }
}

/// Base-21 index of a k-mer, leftmost symbol most significant.
pub fn kmer_index(kmer: &str) -> Result<usize> {
    let mut index = 0usize;
    for (i, b) in kmer.bytes().enumerate() {
        let s = alphabet::index(b).ok_or(Error::InvalidResidue {
            id: kmer.to_string(),
            position: i + 1,
            residue: b as char,
        })?;
        index = index * alphabet::SIZE + s;
    }
    Ok(index)
}

/// Inverse of [`kmer_index`] for a given `k`.
pub fn kmer_from_index(mut index: usize, k: usize) -> String {
    let mut out = vec![0u8; k];
    for slot in out.iter_mut().rev() {
        *slot = alphabet::symbol(index % alphabet::SIZE);
        index /= alphabet::SIZE;
    }
    String::from_utf8(out).expect("alphabet is ASCII")
}

/// All k-mers of `residues` in order of occurrence (overlapping windows).
pub fn kmers(residues: &str, k: usize) -> Vec<&str> {
    if k == 0 || residues.len() < k {
        return Vec::new();
    }
    (0..=residues.len() - k).map(|i| &residues[i..i + k]).collect()
}

/// Sorted distinct k-mer indices with their counts. Assumes validated residues.
fn count_kmers(residues: &[u8], k: usize) -> (Vec<u32>, Vec<f64>) {
    let modulus = alphabet::SIZE.pow(k as u32 - 1);
    let mut window = 0usize;
    let mut seen = Vec::with_capacity(residues.len().saturating_sub(k) + 1);
    for (i, &b) in residues.iter().enumerate() {
        let s = alphabet::index(b).expect("validated residue");
        window = (window % modulus) * alphabet::SIZE + s;
        if i + 1 >= k {
            seen.push(window as u32);
        }
    }
    seen.sort_unstable();
    let mut indices = Vec::new();
    let mut counts = Vec::new();
    for idx in seen {
        if indices.last() == Some(&idx) {
            *counts.last_mut().unwrap() += 1.0;
        } else {
            indices.push(idx);
            counts.push(1.0);
        }
    }
    (indices, counts)
}

fn validated<'a>(id: &str, residues: &'a str) -> Result<&'a [u8]> {
    let residues = alphabet::strip_stop(residues).as_bytes();
    match residues.iter().position(|&b| !alphabet::is_residue(b)) {
        Some(p) => Err(Error::InvalidResidue {
            id: id.to_string(),
            position: p + 1,
            residue: residues[p] as char,
        }),
        None => Ok(residues),
    }
}

/// k-mer count vector of dimension 21^k for one sequence.
pub fn kmer_vector(id: &str, residues: &str, spec: &KmerSpec) -> Result<FeatureVector> {
    if !(1..=MAX_K).contains(&spec.k) {
        return Err(Error::InvalidK(spec.k));
    }
    let residues = validated(id, residues)?;
    if residues.len() < spec.k {
        return Err(Error::SequenceTooShort {
            id: id.to_string(),
            len: residues.len(),
            k: spec.k,
        });
    }
    let (indices, mut values) = count_kmers(residues, spec.k);
    if spec.normalize {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        values.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(FeatureVector {
        encoding: Encoding::KmerCounts,
        dim: spec.dim(),
        values: Values::Sparse { indices, values },
    })
}

/// One-hot encoding: position `p` holding residue `r` sets `21 p + index(r)`.
pub fn ohe_vector(id: &str, residues: &str, expected_len: usize) -> Result<FeatureVector> {
    let residues = validated(id, residues)?;
    if residues.len() != expected_len {
        return Err(Error::LengthMismatch {
            id: id.to_string(),
            expected: expected_len,
            actual: residues.len(),
        });
    }
    let indices = residues
        .iter()
        .enumerate()
        .map(|(p, &b)| (alphabet::SIZE * p + alphabet::index(b).unwrap()) as u32)
        .collect();
    Ok(FeatureVector {
        encoding: Encoding::OneHot,
        dim: alphabet::SIZE * expected_len,
        values: Values::Sparse {
            indices,
            values: vec![1.0; expected_len],
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMode {
    Kmers(KmerSpec),
    /// `expected_len: None` takes the length of the first sequence.
    OneHot { expected_len: Option<usize> },
}

impl FeatureMode {
    pub fn encoding(&self) -> Encoding {
        match self {
            FeatureMode::Kmers(_) => Encoding::KmerCounts,
            FeatureMode::OneHot { .. } => Encoding::OneHot,
        }
    }

    /// Pins an inferred one-hot length from `data`.
    pub fn resolve(self, data: &[LabeledSequence]) -> Result<Self> {
        match self {
            FeatureMode::OneHot { expected_len: None } => {
                let first = data.first().ok_or(Error::EmptyCorpus)?;
                Ok(FeatureMode::OneHot {
                    expected_len: Some(first.residues().len()),
                })
            }
            other => Ok(other),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            FeatureMode::Kmers(spec) => Some(spec.dim()),
            FeatureMode::OneHot { expected_len } => expected_len.map(|l| alphabet::SIZE * l),
        }
    }

    pub fn vector(&self, id: &str, residues: &str) -> Result<FeatureVector> {
        match *self {
            FeatureMode::Kmers(ref spec) => kmer_vector(id, residues, spec),
            FeatureMode::OneHot { expected_len } => {
                let len = expected_len.unwrap_or_else(|| alphabet::strip_stop(residues).len());
                ohe_vector(id, residues, len)
            }
        }
    }
}

/// Dense class ids assigned in sorted order of class name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassIndex {
    names: Vec<String>,
}

impl ClassIndex {
    pub fn from_corpus(data: &[LabeledSequence], level: ClassLevel) -> Result<Self> {
        let mut names = data
            .iter()
            .map(|s| s.class_name(level).map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        names.sort();
        names.dedup();
        Ok(Self { names })
    }

    pub fn from_names(mut names: Vec<String>) -> Self {
        names.sort();
        names.dedup();
        Self { names }
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn labels(&self, data: &[LabeledSequence], level: ClassLevel) -> Result<Vec<usize>> {
        data.iter()
            .map(|s| {
                let name = s.class_name(level)?;
                self.id(name).ok_or_else(|| Error::MissingLabel {
                    id: s.id().to_string(),
                    level: format!("{level} {name:?} (unknown class)"),
                })
            })
            .collect()
    }
}

/// Featurized corpus: one row per sequence in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub encoding: Encoding,
    pub matrix: CsrMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub ids: Vec<String>,
}

/// Feature rows for `data`. Rows are computed in parallel when the
/// `parallel` feature is on; output order always equals input order.
pub fn featurize_rows(data: &[LabeledSequence], mode: &FeatureMode) -> Result<CsrMatrix> {
    let dim = mode.dim();
    let one = |s: &LabeledSequence| mode.vector(s.id(), s.residues());
    #[cfg(feature = "parallel")]
    let vectors: Vec<FeatureVector> = data.par_iter().map(one).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let vectors: Vec<FeatureVector> = data.iter().map(one).collect::<Result<_>>()?;

    let ncols = match (dim, vectors.first()) {
        (Some(d), _) => d,
        (None, Some(v)) => v.dim,
        (None, None) => 0,
    };
    let mut matrix = CsrMatrix::new(ncols);
    for (v, s) in vectors.iter().zip(data) {
        if v.dim != ncols {
            return Err(Error::LengthMismatch {
                id: s.id().to_string(),
                expected: ncols / alphabet::SIZE,
                actual: v.dim / alphabet::SIZE,
            });
        }
        match &v.values {
            Values::Sparse { indices, values } => matrix.push_row_unchecked(indices, values),
            Values::Dense(_) => unreachable!("sequence encodings are sparse"),
        }
    }
    Ok(matrix)
}

/// Featurizes a whole corpus with class ids taken from the corpus itself.
pub fn featurize_corpus(
    data: &[LabeledSequence],
    mode: FeatureMode,
    level: ClassLevel,
) -> Result<FeatureSet> {
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let classes = ClassIndex::from_corpus(data, level)?;
    featurize_with_classes(data, mode.resolve(data)?, level, &classes)
}

/// Featurizes with a fixed class index (shared between train and test).
pub fn featurize_with_classes(
    data: &[LabeledSequence],
    mode: FeatureMode,
    level: ClassLevel,
    classes: &ClassIndex,
) -> Result<FeatureSet> {
    let labels = classes.labels(data, level)?;
    let matrix = featurize_rows(data, &mode)?;
    Ok(FeatureSet {
        encoding: mode.encoding(),
        matrix,
        labels,
        class_names: classes.names().to_vec(),
        ids: data.iter().map(|s| s.id().to_string()).collect(),
    })
}

const FEATURE_MAGIC: &[u8] = b"SQFV1";

/// Writes the binary feature container: magic `SQFV1`, `dim` (u64),
/// encoding tag (u8), row count (u64), then per row `nnz` (u32) followed by
/// `nnz` pairs of (column u32, value f64). All integers little-endian.
pub fn write_features<W: Write>(out: W, encoding: Encoding, matrix: &FeatureMatrix) -> Result<()> {
    let mut enc = Encoder::new(out);
    enc.magic(FEATURE_MAGIC)?;
    enc.usize(matrix.ncols())?;
    enc.u8(encoding.tag())?;
    enc.usize(matrix.nrows())?;
    for i in 0..matrix.nrows() {
        let entries: Vec<(usize, f64)> = matrix.row(i).iter().filter(|&(_, v)| v != 0.0).collect();
        enc.u32(entries.len() as u32)?;
        for (j, v) in entries {
            enc.u32(j as u32)?;
            enc.f64(v)?;
        }
    }
    enc.finish()?;
    Ok(())
}

pub fn read_features<R: Read>(input: R) -> Result<(Encoding, CsrMatrix)> {
    let mut dec = Decoder::new(input, "SQFV1 feature");
    dec.expect_magic(FEATURE_MAGIC)?;
    let dim = dec.usize()?;
    let tag = dec.u8()?;
    let Some(encoding) = Encoding::from_tag(tag) else {
        return dec.fail(format!("unknown encoding tag {tag}"));
    };
    let rows = dec.usize()?;
    let mut matrix = CsrMatrix::new(dim);
    let mut entries = Vec::new();
    for _ in 0..rows {
        let nnz = dec.u32()? as usize;
        entries.clear();
        for _ in 0..nnz {
            entries.push((dec.u32()?, dec.f64()?));
        }
        matrix
            .push_row(entries.iter().copied())
            .map_err(|e| Error::format("SQFV1 feature", e.to_string()))?;
    }
    Ok((encoding, matrix))
}

/// Sparse triplet CSV (`row,column,value`) for tools that cannot read SQFV1.
pub fn write_features_csv<W: Write>(out: W, matrix: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::format("feature CSV", e.to_string());
    w.write_record(["row", "column", "value"]).map_err(err)?;
    for i in 0..matrix.nrows() {
        for (j, v) in matrix.row(i).iter().filter(|&(_, v)| v != 0.0) {
            w.write_record([i.to_string(), j.to_string(), v.to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io("writing feature CSV", e))
}

/// Sidecar JSON carried next to a feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub encoding: Encoding,
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}
