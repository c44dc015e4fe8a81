use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{AggregateMetrics, MeanStd, RunMetrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub rff_seed: Option<u64>,
    pub rff_gamma: Option<f64>,
    pub train_size: usize,
    pub test_size: usize,
    /// Width of the raw feature vectors.
    pub input_dim: usize,
    /// Width the model saw (the RFF dimension when projecting).
    pub model_input_dim: usize,
    pub metrics: RunMetrics,
    /// Classes left out of the ROC-AUC average (no positives or negatives in the test set).
    pub auc_excluded_classes: Vec<String>,
    pub final_loss: Option<f64>,
}

/// Enough to re-run the experiment exactly in sequential mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub started_at_unix: f64,
    pub finished_at_unix: f64,
}

/// Full report, including wall-clock timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub version: u32,
    pub embedding: String,
    pub algorithm: String,
    pub class_names: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub aggregate: AggregateMetrics,
    pub manifest: RunManifest,
}

impl EvalReport {
    pub const SCHEMA: &'static str = "seqclass-report";
    pub const VERSION: u32 = 1;
}

/// The six quality metrics; everything except runtime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics<T> {
    pub accuracy: T,
    pub precision_weighted: T,
    pub recall_weighted: T,
    pub f1_weighted: T,
    pub f1_macro: T,
    pub roc_auc_weighted_ovr: T,
}

impl From<&RunMetrics> for QualityMetrics<f64> {
    fn from(m: &RunMetrics) -> Self {
        Self {
            accuracy: m.accuracy,
            precision_weighted: m.precision_weighted,
            recall_weighted: m.recall_weighted,
            f1_weighted: m.f1_weighted,
            f1_macro: m.f1_macro,
            roc_auc_weighted_ovr: m.roc_auc_weighted_ovr,
        }
    }
}

impl From<&AggregateMetrics> for QualityMetrics<MeanStd> {
    fn from(m: &AggregateMetrics) -> Self {
        Self {
            accuracy: m.accuracy,
            precision_weighted: m.precision_weighted,
            recall_weighted: m.recall_weighted,
            f1_weighted: m.f1_weighted,
            f1_macro: m.f1_macro,
            roc_auc_weighted_ovr: m.roc_auc_weighted_ovr,
        }
    }
}

impl QualityMetrics<MeanStd> {
    fn cells(&self) -> [MeanStd; 6] {
        [
            self.accuracy,
            self.precision_weighted,
            self.recall_weighted,
            self.f1_weighted,
            self.f1_macro,
            self.roc_auc_weighted_ovr,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRun {
    pub run: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: QualityMetrics<f64>,
}

/// The reproducible part of a report: no timings, no timestamps, no paths
/// that depend on when the run happened. Identical configs give
/// byte-identical files in sequential mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub schema: String,
    pub version: u32,
    pub embedding: String,
    pub algorithm: String,
    pub config: ExperimentConfig,
    pub class_names: Vec<String>,
    pub runs: Vec<MetricsRun>,
    pub run_count: usize,
    pub aggregate: QualityMetrics<MeanStd>,
}

impl MetricsDocument {
    pub const SCHEMA: &'static str = "seqclass-metrics";
    pub const VERSION: u32 = 1;

    pub fn new(
        config: &ExperimentConfig,
        embedding: &str,
        algorithm: &str,
        class_names: &[String],
        runs: &[RunRecord],
        aggregate: &AggregateMetrics,
    ) -> Self {
        Self {
            schema: Self::SCHEMA.into(),
            version: Self::VERSION,
            embedding: embedding.into(),
            algorithm: algorithm.into(),
            config: config.clone(),
            class_names: class_names.to_vec(),
            runs: runs
                .iter()
                .map(|r| MetricsRun {
                    run: r.run,
                    seed: r.seed,
                    train_size: r.train_size,
                    test_size: r.test_size,
                    metrics: (&r.metrics).into(),
                })
                .collect(),
            run_count: aggregate.run_count,
            aggregate: aggregate.into(),
        }
    }
}

/// `mean ± std` with three decimals.
pub fn format_cell(m: MeanStd) -> String {
    format!("{:.3} ± {:.3}", m.mean, m.std)
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub embedding: String,
    pub algorithm: String,
    pub quality: QualityMetrics<MeanStd>,
    /// Missing for rows built from `metrics.json`.
    pub runtime: Option<MeanStd>,
}

impl TableRow {
    pub fn from_report(r: &EvalReport) -> Self {
        Self {
            embedding: r.embedding.clone(),
            algorithm: r.algorithm.clone(),
            quality: (&r.aggregate).into(),
            runtime: Some(r.aggregate.train_runtime_seconds),
        }
    }

    /// Accepts either a `report.json` or a `metrics.json` document.
    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::format("report JSON", e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(EvalReport::SCHEMA) => Ok(Self::from_report(&serde_json::from_value(value).map_err(bad)?)),
            Some(MetricsDocument::SCHEMA) => {
                let m: MetricsDocument = serde_json::from_value(value).map_err(bad)?;
                Ok(Self {
                    embedding: m.embedding,
                    algorithm: m.algorithm,
                    quality: m.aggregate,
                    runtime: None,
                })
            }
            other => Err(Error::format("report JSON", format!("unknown schema {other:?}"))),
        }
    }
}

pub const TABLE_HEADER: [&str; 9] = [
    "Embedding",
    "Algo.",
    "Acc.",
    "Prec.",
    "Recall",
    "F1 weigh.",
    "F1 Macro",
    "ROC-AUC",
    "Train. runtime (sec.)",
];

/// CSV with one row per embedding/algorithm pair and `mean ± std` cells.
pub fn comparison_table(rows: &[TableRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::format("results CSV", e.to_string());
    w.write_record(TABLE_HEADER).map_err(err)?;
    for row in rows {
        let mut record = vec![row.embedding.clone(), row.algorithm.clone()];
        record.extend(row.quality.cells().into_iter().map(format_cell));
        record.push(row.runtime.map_or_else(|| "n/a".to_string(), format_cell));
        w.write_record(&record).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("results CSV", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_and_header() {
        assert_eq!(format_cell(MeanStd { mean: 0.6, std: 0.0 }), "0.600 ± 0.000");
        assert_eq!(format_cell(MeanStd { mean: 0.12345, std: 0.0021 }), "0.123 ± 0.002");
        let row = TableRow {
            embedding: "3-mers+RFF".into(),
            algorithm: "LR".into(),
            quality: QualityMetrics {
                accuracy: MeanStd { mean: 0.5, std: 0.1 },
                precision_weighted: MeanStd { mean: 0.5, std: 0.1 },
                recall_weighted: MeanStd { mean: 0.5, std: 0.1 },
                f1_weighted: MeanStd { mean: 0.5, std: 0.1 },
                f1_macro: MeanStd { mean: 0.5, std: 0.1 },
                roc_auc_weighted_ovr: MeanStd { mean: 0.5, std: 0.1 },
            },
            runtime: None,
        };
        let table = comparison_table(&[row]).unwrap();
        let mut lines = table.lines();
        assert_eq!(
            lines.next().unwrap(),
            "Embedding,Algo.,Acc.,Prec.,Recall,F1 weigh.,F1 Macro,ROC-AUC,Train. runtime (sec.)"
        );
        assert_eq!(
            lines.next().unwrap(),
            "3-mers+RFF,LR,0.500 ± 0.100,0.500 ± 0.100,0.500 ± 0.100,0.500 ± 0.100,0.500 ± 0.100,0.500 ± 0.100,n/a"
        );
    }

    #[test]
    fn unknown_schema() {
        assert!(TableRow::from_json(r#"{"schema":"other"}"#).is_err());
        assert!(TableRow::from_json("not json").is_err());
    }
}
