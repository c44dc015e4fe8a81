//! End-to-end experiment driver: ingest, featurize, optional RFF, train,
//! evaluate and report. Each `cmd_*` function backs one CLI subcommand.

mod config;
mod corpus;
mod report;

pub use config::{EncodingChoice, ExperimentConfig, KEYS};
pub use corpus::{read_corpus, write_corpus};
pub use report::{comparison_table, format_cell, EvalReport, MetricsDocument, QualityMetrics, RunManifest, RunRecord, TableRow};

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{featurize_rows, write_features, write_features_csv, ClassIndex, FeatureMode, LabelSidecar};
use crate::infogain::{self, IgRow};
use crate::ingest::{self, ClassLevel, LabeledSequence, Metadata};
use crate::linear_models::Classifier;
use crate::metrics::{self, ConfusionMatrix, RunMetrics};
use crate::model::{write_loss_trace, TrainedModel};
use crate::rff::RffProjector;
use crate::sparse::{CsrMatrix, FeatureMatrix};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::format("JSON", e.to_string()))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub sequences: usize,
    pub dropped: usize,
}

/// Parses, validates and joins FASTA + metadata. Trailing stops are stripped.
pub fn load_sequences(fasta: &Path, metadata: &Path) -> Result<(Vec<LabeledSequence>, IngestSummary)> {
    let records = ingest::parse_fasta(open(fasta)?).map_err(|e| e.in_stage("reading FASTA"))?;
    let meta = Metadata::from_tsv(open(metadata)?).map_err(|e| e.in_stage("reading metadata"))?;
    let joined = ingest::join_metadata(records, &meta)?;
    let summary = IngestSummary {
        sequences: joined.sequences.len(),
        dropped: joined.dropped,
    };
    Ok((joined.sequences, summary))
}

pub fn load_corpus(path: &Path) -> Result<Vec<LabeledSequence>> {
    let data = read_corpus(open(path)?)?;
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(data)
}

/// `ingest`: FASTA + metadata to a binary corpus file.
pub fn cmd_ingest(fasta: &Path, metadata: &Path, out: &Path) -> Result<IngestSummary> {
    let (data, summary) = load_sequences(fasta, metadata)?;
    let mut w = create(out)?;
    write_corpus(&mut w, &data)?;
    w.flush().map_err(|e| Error::io(format!("writing {}", out.display()), e))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizeOptions {
    pub mode: FeatureMode,
    pub class_level: ClassLevel,
    /// `(D, gamma, seed)`; gamma `None` means `1 / d`.
    pub rff: Option<(usize, Option<f64>, u64)>,
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeaturizeSummary {
    pub rows: usize,
    pub dim: usize,
    pub nnz: usize,
    pub files: Vec<PathBuf>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `featurize`: corpus to `<prefix>.sqfv` plus a label sidecar
/// (`<prefix>.labels.json`), optionally a triplet CSV and an RFF header.
pub fn cmd_featurize(corpus: &Path, prefix: &Path, opts: &FeaturizeOptions) -> Result<FeaturizeSummary> {
    let data = load_corpus(corpus)?;
    let mode = opts.mode.resolve(&data)?;
    let classes = ClassIndex::from_corpus(&data, opts.class_level)?;
    let labels = classes.labels(&data, opts.class_level)?;
    let raw = featurize_rows(&data, &mode).map_err(|e| e.in_stage("featurize"))?;
    let mut encoding = mode.encoding();
    let mut files = Vec::new();

    let matrix: FeatureMatrix = match opts.rff {
        Some((dim, gamma, seed)) => {
            let d = raw.ncols();
            let projector = RffProjector::new(d, dim, gamma.unwrap_or(1.0 / d as f64), seed)?;
            let path = with_suffix(prefix, ".rff.json");
            write_json(&path, &projector.header())?;
            files.push(path);
            encoding = crate::features::Encoding::Rff;
            projector.project_matrix(&raw.into())?.into()
        }
        None => raw.into(),
    };

    let path = with_suffix(prefix, ".sqfv");
    let mut w = create(&path)?;
    write_features(&mut w, encoding, &matrix)?;
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    files.push(path);

    let sidecar = LabelSidecar {
        encoding,
        ids: data.iter().map(|s| s.id().to_string()).collect(),
        labels,
        class_names: classes.names().to_vec(),
    };
    let path = with_suffix(prefix, ".labels.json");
    write_json(&path, &sidecar)?;
    files.push(path);

    if opts.csv {
        let path = with_suffix(prefix, ".csv");
        let mut w = create(&path)?;
        write_features_csv(&mut w, &matrix)?;
        files.push(path);
    }
    let nnz = (0..matrix.nrows()).map(|i| matrix.row(i).nnz()).sum();
    Ok(FeaturizeSummary {
        rows: matrix.nrows(),
        dim: matrix.ncols(),
        nnz,
        files,
    })
}

/// One repetition of the protocol, without writing anything.
pub struct RunResult {
    pub record: RunRecord,
    pub model: TrainedModel,
}

fn take_rows(data: &[LabeledSequence], mask: &[bool], keep: bool) -> Vec<LabeledSequence> {
    data.iter()
        .zip(mask)
        .filter(|(_, &m)| m == keep)
        .map(|(s, _)| s.clone())
        .collect()
}

/// Split, featurize, project, fit (timed), score and evaluate for run `run`.
/// `mode` must already be resolved against the whole corpus.
pub fn execute_run(
    config: &ExperimentConfig,
    data: &[LabeledSequence],
    classes: &ClassIndex,
    mode: &FeatureMode,
    run: usize,
) -> Result<RunResult> {
    let level = config.class_level;
    let seed = config.run_seed(run);
    let mask = ingest::split_mask(data, &config.split_spec(run), level).map_err(|e| e.in_stage("split"))?;
    let train = take_rows(data, &mask, true);
    let test = take_rows(data, &mask, false);
    let y_train = classes.labels(&train, level)?;
    let y_test = classes.labels(&test, level)?;

    let x_train = featurize_rows(&train, mode).map_err(|e| e.in_stage("featurize"))?;
    let input_dim = x_train.ncols();
    // The projector is built from (d, D, gamma, seed) before any test row exists.
    let projector = if config.rff_enabled() {
        let gamma = config.rff_gamma.unwrap_or(1.0 / input_dim as f64);
        Some(
            RffProjector::new(input_dim, config.rff_dim, gamma, config.rff_seed_for(run))
                .map_err(|e| e.in_stage("rff"))?,
        )
    } else {
        None
    };
    let project = |x: CsrMatrix| -> Result<FeatureMatrix> {
        match &projector {
            Some(p) => Ok(p.project_matrix(&x.into()).map_err(|e| e.in_stage("rff"))?.into()),
            None => Ok(x.into()),
        }
    };
    let x_train = project(x_train)?;

    let start = Instant::now();
    let model = TrainedModel::fit(config.model, &x_train, &y_train, classes.len(), &config.hyperparameters, seed)
        .map_err(|e| e.in_stage("fit"))?;
    let train_runtime_seconds = start.elapsed().as_secs_f64();
    drop(x_train);

    let x_test = project(featurize_rows(&test, mode).map_err(|e| e.in_stage("featurize"))?)?;
    let scores = model.scores(&x_test).map_err(|e| e.in_stage("score"))?;
    let predicted: Vec<usize> = (0..scores.nrows()).map(|i| scores.row_argmax(i)).collect();
    let evaluate = || -> Result<_> {
        let confusion = ConfusionMatrix::new(&y_test, &predicted, classes.len())?;
        let summary = metrics::summarize(&confusion)?;
        let auc = metrics::roc_auc_ovr_weighted(&scores, &y_test)?;
        Ok((summary, auc))
    };
    let (summary, auc) = evaluate().map_err(|e| e.in_stage("evaluate"))?;

    let record = RunRecord {
        run,
        seed,
        rff_seed: projector.as_ref().map(|p| p.seed()),
        rff_gamma: projector.as_ref().map(|p| p.gamma()),
        train_size: train.len(),
        test_size: test.len(),
        input_dim,
        model_input_dim: model.input_dim(),
        metrics: RunMetrics::from_summary(summary, auc.value, train_runtime_seconds),
        auc_excluded_classes: auc.excluded.iter().map(|&c| classes.names()[c].clone()).collect(),
        final_loss: model.loss_trace().last().copied(),
    };
    Ok(RunResult { record, model })
}

/// Everything `cmd_run` produced.
#[derive(Debug)]
pub struct RunOutput {
    pub report: EvalReport,
    pub metrics: MetricsDocument,
    pub table: String,
}

/// `run`: the full repeated-split protocol for one config. Writes
/// `report.json` (with timings and timestamps), `metrics.json` (fully
/// deterministic), `results.csv`, `config.txt` and one JSON per run under
/// `runs/` as each finishes.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let started_at = unix_now();
    let config = config.resolved();
    let data = match (&config.corpus, &config.fasta, &config.metadata) {
        (Some(corpus), _, _) => load_corpus(corpus)?,
        (None, Some(fasta), Some(meta)) => load_sequences(fasta, meta)?.0,
        _ => return Err(Error::InvalidConfig("no input".into())),
    };
    run_on(&config, &data, started_at)
}

/// [`cmd_run`] on an already loaded corpus.
pub fn run_on(config: &ExperimentConfig, data: &[LabeledSequence], started_at: f64) -> Result<RunOutput> {
    config.validate()?;
    let config = config.resolved();
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let classes = ClassIndex::from_corpus(data, config.class_level)?;
    let mode = config.feature_mode()?.resolve(data)?;
    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir.join("runs")).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    fs::write(out_dir.join("config.txt"), config.to_kv_string())
        .map_err(|e| Error::io("writing config.txt", e))?;

    let one = |run: usize| -> Result<(RunRecord, Vec<PathBuf>)> {
        let result = execute_run(&config, data, &classes, &mode, run)?;
        let mut artifacts = Vec::new();
        let path = out_dir.join("runs").join(format!("run_{run}.json"));
        write_json(&path, &result.record)?;
        artifacts.push(path);
        if config.save_models {
            let path = out_dir.join("models").join(format!("run_{run}.model"));
            let mut w = create(&path)?;
            result.model.write(&mut w)?;
            w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
            artifacts.push(path);
            let path = out_dir.join("models").join(format!("run_{run}.summary.json"));
            write_json(&path, &result.model.summary())?;
            artifacts.push(path);
            if !result.model.loss_trace().is_empty() {
                let path = out_dir.join("models").join(format!("run_{run}.loss.csv"));
                write_loss_trace(create(&path)?, result.model.loss_trace())?;
                artifacts.push(path);
            }
        }
        Ok((result.record, artifacts))
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<(RunRecord, Vec<PathBuf>)> = if config.parallel_runs {
        use rayon::prelude::*;
        (0..config.runs).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..config.runs).map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<(RunRecord, Vec<PathBuf>)> = (0..config.runs).map(one).collect::<Result<_>>()?;

    let (runs, run_artifacts): (Vec<RunRecord>, Vec<Vec<PathBuf>>) = outcomes.into_iter().unzip();
    let run_metrics: Vec<RunMetrics> = runs.iter().map(|r| r.metrics).collect();
    let aggregate = metrics::aggregate(&run_metrics)?;

    let report_path = out_dir.join("report.json");
    let metrics_path = out_dir.join("metrics.json");
    let csv_path = out_dir.join("results.csv");
    let mut artifacts = vec![out_dir.join("config.txt"), report_path.clone(), metrics_path.clone(), csv_path.clone()];
    artifacts.extend(run_artifacts.into_iter().flatten());

    let embedding = config.embedding_label();
    let algorithm = config.model.display_name().to_string();
    let metrics_doc = MetricsDocument::new(&config, &embedding, &algorithm, classes.names(), &runs, &aggregate);
    let report = EvalReport {
        schema: EvalReport::SCHEMA.into(),
        version: EvalReport::VERSION,
        embedding,
        algorithm,
        class_names: classes.names().to_vec(),
        runs,
        aggregate,
        manifest: RunManifest {
            config: config.clone(),
            seeds: (0..config.runs).map(|i| config.run_seed(i)).collect(),
            artifacts: artifacts.iter().map(|p| p.display().to_string()).collect(),
            tool_version: TOOL_VERSION.into(),
            started_at_unix: started_at,
            finished_at_unix: unix_now(),
        },
    };
    write_json(&metrics_path, &metrics_doc)?;
    write_json(&report_path, &report)?;
    let table = comparison_table(&[TableRow::from_report(&report)])?;
    fs::write(&csv_path, &table).map_err(|e| Error::io(format!("writing {}", csv_path.display()), e))?;
    Ok(RunOutput {
        report,
        metrics: metrics_doc,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IgSummary {
    pub sequences_used: usize,
    pub positions: usize,
    pub class_entropy: f64,
    /// Set when the requested subsample exceeded the corpus.
    pub warning: Option<String>,
    /// The ten most informative positions, highest first.
    pub top: Vec<IgRow>,
}

/// `ig`: per-position information gain to CSV, plus an optional
/// histogram JSON for plotting.
pub fn cmd_ig(
    corpus: &Path,
    level: ClassLevel,
    subsample: Option<usize>,
    seed: u64,
    out_csv: &Path,
    histogram_json: Option<&Path>,
) -> Result<IgSummary> {
    let data = load_corpus(corpus)?;
    let mut warning = None;
    let used = match subsample {
        Some(size) if size >= data.len() => {
            warning = Some(format!(
                "subsample of {size} requested but the corpus has {} sequences; using all of them",
                data.len()
            ));
            data
        }
        Some(size) => infogain::subsample(&data, size, seed),
        None => data,
    };
    let analysis = infogain::information_gain(&used, level)?;
    infogain::export_ig(create(out_csv)?, &analysis.table)?;
    if let Some(path) = histogram_json {
        write_json(path, &analysis.histograms())?;
    }
    let mut top = analysis.table.rows.clone();
    top.sort_by(|a, b| b.ig_bits.total_cmp(&a.ig_bits).then(a.position.cmp(&b.position)));
    top.truncate(10);
    Ok(IgSummary {
        sequences_used: used.len(),
        positions: analysis.table.sequence_length,
        class_entropy: analysis.table.class_entropy,
        warning,
        top,
    })
}

/// `report`: merges `report.json` or `metrics.json` files into one table.
pub fn cmd_report(inputs: &[PathBuf], out: Option<&Path>) -> Result<String> {
    if inputs.is_empty() {
        return Err(Error::InvalidConfig("report needs at least one input".into()));
    }
    let rows = inputs
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
            TableRow::from_json(&text)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = comparison_table(&rows)?;
    if let Some(path) = out {
        let mut w = create(path)?;
        w.write_all(table.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(table)
}
