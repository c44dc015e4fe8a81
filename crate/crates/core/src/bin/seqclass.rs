use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seqclass::features::{FeatureMode, KmerSpec};
use seqclass::ingest::ClassLevel;
use seqclass::pipeline::{self, ExperimentConfig, FeaturizeOptions};
use seqclass::{Error, Result};

#[derive(Parser)]
#[command(name = "seqclass", version, about = "Alignment-free amino-acid sequence classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and join FASTA + metadata into a binary corpus.
    Ingest {
        #[arg(long)]
        fasta: PathBuf,
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write feature vectors for a corpus (SQFV1 + label sidecar).
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        /// Output prefix; `.sqfv`, `.labels.json` etc. are appended.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "kmers")]
        encoding: pipeline::EncodingChoice,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value = "continent")]
        class_level: ClassLevel,
        /// Project through random Fourier features.
        #[arg(long)]
        rff: bool,
        #[arg(long, default_value_t = 1000)]
        rff_dim: usize,
        #[arg(long)]
        rff_gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        rff_seed: u64,
        /// Also write a `row,column,value` CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Run the repeated train/test protocol for one configuration.
    Run(RunArgs),
    /// Per-position information gain of an aligned corpus.
    Ig {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "continent")]
        class_level: ClassLevel,
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-position, per-symbol class histograms as JSON.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Merge report.json / metrics.json files into one comparison table.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Every flag overrides the key of the same name in the config file.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    fasta: Option<String>,
    #[arg(long)]
    metadata: Option<String>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    class_level: Option<String>,
    #[arg(long)]
    encoding: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    normalize: Option<String>,
    #[arg(long)]
    use_rff: Option<String>,
    #[arg(long)]
    rff_dim: Option<String>,
    #[arg(long)]
    rff_gamma: Option<String>,
    #[arg(long)]
    rff_seed: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    train_fraction: Option<String>,
    #[arg(long)]
    stratified: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    parallel_runs: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    save_models: Option<String>,
    #[arg(long)]
    lr_lambda: Option<String>,
    #[arg(long)]
    lr_max_iters: Option<String>,
    #[arg(long)]
    lr_tol: Option<String>,
    #[arg(long)]
    ridge_alpha: Option<String>,
    #[arg(long)]
    ridge_solver: Option<String>,
    #[arg(long)]
    nn_hidden_width: Option<String>,
    #[arg(long)]
    nn_batch_size: Option<String>,
    #[arg(long)]
    nn_epochs: Option<String>,
    #[arg(long)]
    nn_learning_rate: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 28] {
        [
            ("fasta", &self.fasta),
            ("metadata", &self.metadata),
            ("corpus", &self.corpus),
            ("class_level", &self.class_level),
            ("encoding", &self.encoding),
            ("k", &self.k),
            ("normalize", &self.normalize),
            ("use_rff", &self.use_rff),
            ("rff_dim", &self.rff_dim),
            ("rff_gamma", &self.rff_gamma),
            ("rff_seed", &self.rff_seed),
            ("model", &self.model),
            ("train_fraction", &self.train_fraction),
            ("stratified", &self.stratified),
            ("seed", &self.seed),
            ("runs", &self.runs),
            ("parallel_runs", &self.parallel_runs),
            ("output_dir", &self.output_dir),
            ("save_models", &self.save_models),
            ("lr_lambda", &self.lr_lambda),
            ("lr_max_iters", &self.lr_max_iters),
            ("lr_tol", &self.lr_tol),
            ("ridge_alpha", &self.ridge_alpha),
            ("ridge_solver", &self.ridge_solver),
            ("nn_hidden_width", &self.nn_hidden_width),
            ("nn_batch_size", &self.nn_batch_size),
            ("nn_epochs", &self.nn_epochs),
            ("nn_learning_rate", &self.nn_learning_rate),
        ]
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
                ExperimentConfig::from_kv_str(&text)?
            }
            None => ExperimentConfig::default(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            config.set(k.trim(), v.trim())?;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { fasta, metadata, out } => {
            let s = pipeline::cmd_ingest(&fasta, &metadata, &out)?;
            eprintln!("{} sequences, {} dropped", s.sequences, s.dropped);
            println!("wrote {}", out.display());
        }
        Command::Featurize {
            corpus,
            out,
            encoding,
            k,
            normalize,
            class_level,
            rff,
            rff_dim,
            rff_gamma,
            rff_seed,
            csv,
        } => {
            let mode = match encoding {
                pipeline::EncodingChoice::Kmers => FeatureMode::Kmers(KmerSpec {
                    normalize,
                    ..KmerSpec::new(k)?
                }),
                pipeline::EncodingChoice::Ohe => FeatureMode::OneHot { expected_len: None },
            };
            let opts = FeaturizeOptions {
                mode,
                class_level,
                rff: rff.then_some((rff_dim, rff_gamma, rff_seed)),
                csv,
            };
            let s = pipeline::cmd_featurize(&corpus, &out, &opts)?;
            eprintln!("{} rows x {} columns, {} non-zeros", s.rows, s.dim, s.nnz);
            for f in s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Run(args) => {
            let config = args.resolve()?;
            let out = pipeline::cmd_run(&config)?;
            eprintln!(
                "{} runs of {} on {} written to {}",
                out.report.runs.len(),
                out.report.algorithm,
                out.report.embedding,
                config.output_dir.display()
            );
            print!("{}", out.table);
        }
        Command::Ig {
            corpus,
            class_level,
            subsample,
            seed,
            out,
            histogram,
        } => {
            let s = pipeline::cmd_ig(&corpus, class_level, subsample, seed, &out, histogram.as_deref())?;
            if let Some(w) = &s.warning {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{} positions over {} sequences, H(C) = {:.4} bits",
                s.positions, s.sequences_used, s.class_entropy
            );
            for row in &s.top {
                println!("{}\t{:.4}", row.position, row.ig_bits);
            }
        }
        Command::Report { inputs, out } => {
            print!("{}", pipeline::cmd_report(&inputs, out.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
