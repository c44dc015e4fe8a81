//! Per-position information gain between residue and class label,
//! `IG(C, P) = H(C) - H(C | P)`, in bits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::alphabet;
use crate::error::{Error, Result};
use crate::features::ClassIndex;
use crate::ingest::{ClassLevel, LabeledSequence};
use crate::rng::{self, Stream};

/// Base-2 entropy of a probability vector; `0 log 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&p| p < 0.0) {
        return Err(Error::NotNormalized(total));
    }
    Ok(entropy_unchecked(dist.iter().copied()))
}

fn entropy_unchecked(dist: impl Iterator<Item = f64>) -> f64 {
    dist.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Entropy of the empirical distribution given by `counts`.
pub fn entropy_of_counts(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    entropy_unchecked(counts.iter().map(|&c| c as f64 / n as f64))
}

/// Class histogram per residue symbol at one position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionDistribution {
    /// 0-based position.
    pub position: usize,
    /// `counts[symbol][class]` over the 21 alphabet symbols.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl PositionDistribution {
    fn new(position: usize, classes: usize) -> Self {
        Self {
            position,
            counts: vec![vec![0; classes]; alphabet::SIZE],
            total: 0,
        }
    }

    /// `H(C) - sum_s P(s) H(C | s)`
    pub fn information_gain(&self, class_entropy: f64) -> f64 {
        let n = self.total as f64;
        let conditional: f64 = self
            .counts
            .iter()
            .map(|by_class| {
                let ns: u64 = by_class.iter().sum();
                if ns == 0 {
                    0.0
                } else {
                    ns as f64 / n * entropy_of_counts(by_class)
                }
            })
            .sum();
        (class_entropy - conditional).clamp(0.0, class_entropy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgRow {
    /// 1-based position.
    pub position: usize,
    pub ig_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgTable {
    pub sequence_length: usize,
    pub class_entropy: f64,
    pub rows: Vec<IgRow>,
}

/// Everything computed from one aligned corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgAnalysis {
    pub table: IgTable,
    pub class_names: Vec<String>,
    pub class_counts: Vec<u64>,
    pub positions: Vec<PositionDistribution>,
}

/// Information gain of every position for class `level`.
pub fn information_gain(sequences: &[LabeledSequence], level: ClassLevel) -> Result<IgAnalysis> {
    let first = sequences.first().ok_or(Error::EmptyCorpus)?;
    let len = first.residues().len();
    let ragged: Vec<String> = sequences
        .iter()
        .filter(|s| s.residues().len() != len)
        .map(|s| s.id().to_string())
        .collect();
    if !ragged.is_empty() {
        return Err(Error::RaggedLengths(ragged));
    }
    let classes = ClassIndex::from_corpus(sequences, level)?;
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let labels = classes.labels(sequences, level)?;
    let mut class_counts = vec![0u64; classes.len()];
    labels.iter().for_each(|&c| class_counts[c] += 1);
    let class_entropy = entropy_of_counts(&class_counts);

    let count_position = |p: usize| -> Result<PositionDistribution> {
        let mut dist = PositionDistribution::new(p, classes.len());
        for (s, &c) in sequences.iter().zip(&labels) {
            let b = s.residues().as_bytes()[p];
            let sym = alphabet::index(b).ok_or_else(|| Error::InvalidResidue {
                id: s.id().to_string(),
                position: p + 1,
                residue: b as char,
            })?;
            dist.counts[sym][c] += 1;
            dist.total += 1;
        }
        Ok(dist)
    };
    #[cfg(feature = "parallel")]
    let positions: Vec<PositionDistribution> = {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(count_position).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let positions: Vec<PositionDistribution> = (0..len).map(count_position).collect::<Result<_>>()?;

    let rows = positions
        .iter()
        .map(|d| IgRow {
            position: d.position + 1,
            ig_bits: d.information_gain(class_entropy),
        })
        .collect();
    Ok(IgAnalysis {
        table: IgTable {
            sequence_length: len,
            class_entropy,
            rows,
        },
        class_names: classes.names().to_vec(),
        class_counts,
        positions,
    })
}

/// Seeded uniform subsample without replacement, keeping input order.
/// Returns the whole slice when `size >= len`.
pub fn subsample(sequences: &[LabeledSequence], size: usize, seed: u64) -> Vec<LabeledSequence> {
    if size >= sequences.len() {
        return sequences.to_vec();
    }
    let mut rng = rng::stream(seed, Stream::Subsample);
    let mut picked = index::sample(&mut rng, sequences.len(), size).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| sequences[i].clone()).collect()
}

/// CSV with header `position,information_gain`, positions 1-based.
pub fn export_ig<W: Write>(out: W, table: &IgTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::format("IG CSV", e.to_string());
    w.write_record(["position", "information_gain"]).map_err(err)?;
    for r in &table.rows {
        w.write_record([r.position.to_string(), r.ig_bits.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("writing IG CSV", e))
}

/// Reads back the rows written by [`export_ig`].
pub fn read_ig_csv<R: BufRead>(input: R) -> Result<Vec<IgRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format("IG CSV", e.to_string()))?;
        let parse_err = |what: &str| Error::format("IG CSV", format!("bad {what}"));
        let position = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("position"))?;
        let ig_bits = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("value"))?;
        rows.push(IgRow { position, ig_bits });
    }
    Ok(rows)
}

/// Per-position, per-symbol class histograms keyed by symbol letter, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramExport {
    pub class_names: Vec<String>,
    pub positions: Vec<PositionHistogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionHistogram {
    pub position: usize,
    pub ig_bits: f64,
    pub symbols: BTreeMap<char, Vec<u64>>,
}

impl IgAnalysis {
    pub fn histograms(&self) -> HistogramExport {
        let positions = self
            .positions
            .iter()
            .zip(&self.table.rows)
            .map(|(d, row)| PositionHistogram {
                position: row.position,
                ig_bits: row.ig_bits,
                symbols: d
                    .counts
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.iter().any(|&v| v > 0))
                    .map(|(s, c)| (alphabet::symbol(s) as char, c.clone()))
                    .collect(),
            })
            .collect();
        HistogramExport {
            class_names: self.class_names.clone(),
            positions,
        }
    }
}
