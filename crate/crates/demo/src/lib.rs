//! Browser bindings for three seqclass operations. Each export returns a
//! JSON string; the plain functions underneath are what the tests call.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use seqclass::features::{kmer_from_index, kmer_vector, kmers, KmerSpec};
use seqclass::infogain::information_gain;
use seqclass::ingest::{ClassLevel, LabelHierarchy, LabeledSequence, SequenceRecord};
use seqclass::rff::{exact_kernel, RffProjector};
use seqclass::rng::{self, Stream};

/// Largest k the page will decompose; 21^4 columns is still cheap to list.
pub const MAX_DEMO_K: usize = 4;
/// Caps keep a slider drag from freezing the tab.
pub const MAX_RFF_DIM: usize = 8192;
pub const MAX_PAIRS: usize = 500;

#[derive(Debug, Serialize, PartialEq)]
pub struct KmerCount {
    pub kmer: String,
    pub index: usize,
    pub count: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Decomposition {
    pub k: usize,
    pub dim: usize,
    pub total: f64,
    /// Every k-mer in reading order, repeats included.
    pub kmers: Vec<String>,
    /// Non-zero columns of the count vector, by column index.
    pub counts: Vec<KmerCount>,
}

pub fn decompose(residues: &str, k: usize) -> Result<Decomposition, String> {
    if k > MAX_DEMO_K {
        return Err(format!("k must be at most {MAX_DEMO_K} here"));
    }
    let residues = residues.trim().to_ascii_uppercase();
    let spec = KmerSpec::new(k).map_err(|e| e.to_string())?;
    let record = SequenceRecord::new("input", residues.as_str()).map_err(|e| e.to_string())?;
    let v = kmer_vector(&record.id, record.stripped(), &spec).map_err(|e| e.to_string())?;
    let listed: Vec<String> = kmers(record.stripped(), k).into_iter().map(str::to_string).collect();
    let counts = v
        .view()
        .iter()
        .map(|(index, count)| KmerCount { kmer: kmer_from_index(index, k), index, count })
        .collect();
    Ok(Decomposition {
        k,
        dim: spec.dim(),
        total: v.sum(),
        kmers: listed,
        counts,
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct CurvePoint {
    pub dim: usize,
    pub rmse: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct KernelCurve {
    pub input_dim: usize,
    pub gamma: f64,
    pub pairs: usize,
    pub points: Vec<CurvePoint>,
}

fn unit_vector(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// How well `z(a).z(b)` tracks the Gaussian kernel on random unit-vector
/// pairs, for each projection width in `dims`.
pub fn kernel_curve(input_dim: usize, gamma: f64, dims: &[usize], pairs: usize, seed: u64) -> Result<KernelCurve, String> {
    if input_dim == 0 || pairs == 0 || pairs > MAX_PAIRS {
        return Err(format!("need input_dim >= 1 and 1..={MAX_PAIRS} pairs"));
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > MAX_RFF_DIM) {
        return Err(format!("projection width {d} outside 1..={MAX_RFF_DIM}"));
    }
    let mut rng = rng::stream(seed, Stream::Split);
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| (unit_vector(&mut rng, input_dim), unit_vector(&mut rng, input_dim)))
        .collect();
    let mut points = Vec::with_capacity(dims.len());
    for &dim in dims {
        let proj = RffProjector::new(input_dim, dim, gamma, seed).map_err(|e| e.to_string())?;
        let (mut sq, mut worst) = (0.0, 0.0f64);
        for (a, b) in &data {
            let za = proj.project(a).map_err(|e| e.to_string())?;
            let zb = proj.project(b).map_err(|e| e.to_string())?;
            let approx: f64 = za.iter().zip(&zb).map(|(x, y)| x * y).sum();
            let err = approx - exact_kernel(a, b, gamma).map_err(|e| e.to_string())?;
            sq += err * err;
            worst = worst.max(err.abs());
        }
        points.push(CurvePoint {
            dim,
            rmse: (sq / pairs as f64).sqrt(),
            max_abs_error: worst,
        });
    }
    Ok(KernelCurve { input_dim, gamma, pairs, points })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct PositionGain {
    pub position: usize,
    pub ig_bits: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct GainProfile {
    pub sequences: usize,
    pub class_names: Vec<String>,
    pub class_entropy: f64,
    pub rows: Vec<PositionGain>,
}

/// `text` holds one aligned sequence per line followed by its class,
/// separated by whitespace. Blank lines and `#` comments are skipped.
pub fn gain_profile(text: &str) -> Result<GainProfile, String> {
    let mut data = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(residues), Some(class), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected `SEQUENCE CLASS`", n + 1));
        };
        let record = SequenceRecord::new(format!("line{}", n + 1), residues.to_ascii_uppercase())
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        data.push(LabeledSequence {
            record,
            label: LabelHierarchy {
                continent: class.to_string(),
                country: class.to_string(),
                state: None,
            },
        });
    }
    let ig = information_gain(&data, ClassLevel::Continent).map_err(|e| e.to_string())?;
    Ok(GainProfile {
        sequences: data.len(),
        class_names: ig.class_names,
        class_entropy: ig.table.class_entropy,
        rows: ig
            .table
            .rows
            .iter()
            .map(|r| PositionGain { position: r.position, ig_bits: r.ig_bits })
            .collect(),
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = kmerDecomposition)]
pub fn kmer_decomposition(residues: &str, k: usize) -> Result<String, JsError> {
    to_json(decompose(residues, k))
}

#[wasm_bindgen(js_name = rffCurve)]
pub fn rff_curve(input_dim: usize, gamma: f64, dims: Vec<u32>, pairs: usize, seed: u32) -> Result<String, JsError> {
    let dims: Vec<usize> = dims.into_iter().map(|d| d as usize).collect();
    to_json(kernel_curve(input_dim, gamma, &dims, pairs, seed as u64))
}

#[wasm_bindgen(js_name = positionInformationGain)]
pub fn position_information_gain(text: &str) -> Result<String, JsError> {
    to_json(gain_profile(text))
}
