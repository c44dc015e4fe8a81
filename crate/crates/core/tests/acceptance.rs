//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p seqclass --test acceptance`.

mod common;

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use seqclass::features::{featurize_rows, kmer_vector, kmers, FeatureMode, KmerSpec};
use seqclass::infogain::information_gain;
use seqclass::ingest::{ClassLevel, LabeledSequence};
use seqclass::linalg::DenseMatrix;
use seqclass::metrics::{roc_auc_ovr_weighted, summarize, ConfusionMatrix, Summary};
use seqclass::pipeline::{self, ExperimentConfig, RunOutput};
use seqclass::rff::{exact_kernel, RffProjector};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_secs,
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn run_pipeline(dir: &Path, data: &[LabeledSequence], settings: &[(&str, &str)]) -> Result<RunOutput, String> {
    let corpus = dir.join("corpus.sqc");
    if !corpus.exists() {
        pipeline::write_corpus(fs::File::create(&corpus).map_err(|e| e.to_string())?, data).map_err(|e| e.to_string())?;
    }
    let mut config = ExperimentConfig::default();
    config.set("corpus", corpus.to_str().unwrap()).map_err(|e| e.to_string())?;
    config.set("output_dir", dir.join("out").to_str().unwrap()).map_err(|e| e.to_string())?;
    for (k, v) in settings {
        config.set(k, v).map_err(|e| e.to_string())?;
    }
    pipeline::cmd_run(&config).map_err(|e| e.to_string())
}

/// Closed form of the majority predictor on a test set where the majority
/// class has share `p` over `classes` classes: (accuracy, precision_w, f1_w, f1_macro).
fn majority_closed_form(p: f64, classes: usize) -> (f64, f64, f64, f64) {
    let f1_major = 2.0 * p / (1.0 + p);
    (p, p * p, p * f1_major, f1_major / classes as f64)
}

fn majority_continent() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = common::sized_corpus(&common::majority_sizes(10_000, 5, 0.60), 50, 1);
    let start = Instant::now();
    let out = run_pipeline(dir.path(), &data, &[("model", "majority"), ("runs", "5")])?;
    let elapsed = start.elapsed();
    let agg = out.report.aggregate;
    let expected = [
        ("accuracy", agg.accuracy, 0.60),
        ("precision", agg.precision_weighted, 0.36),
        ("recall", agg.recall_weighted, 0.60),
        ("f1_weighted", agg.f1_weighted, 0.45),
        ("f1_macro", agg.f1_macro, 0.15),
        ("roc_auc", agg.roc_auc_weighted_ovr, 0.50),
    ];
    for (name, got, want) in expected {
        ensure((got.mean - want).abs() <= 1e-3, format!("{name} = {:.6}, expected {want}", got.mean))?;
        ensure(got.std == 0.0, format!("{name} std = {}", got.std))?;
    }
    within_time(elapsed, 10.0)?;
    Ok(format!(
        "acc {:.3}, prec {:.3}, f1w {:.3}, f1m {:.3}, auc {:.3}, std 0, {:.2}s",
        agg.accuracy.mean,
        agg.precision_weighted.mean,
        agg.f1_weighted.mean,
        agg.f1_macro.mean,
        agg.roc_auc_weighted_ovr.mean,
        elapsed.as_secs_f64()
    ))
}

fn majority_country() -> Outcome {
    let mut problems = Vec::new();
    let mut details = Vec::new();
    for (classes, share, want_w, want_m) in [(27, 0.27, 0.12, 0.01), (12, 0.33, 0.17, 0.04)] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = common::sized_corpus(&common::majority_sizes(10_000, classes, share), 30, classes as u64);
        let out = run_pipeline(dir.path(), &data, &[("model", "majority"), ("runs", "5")])?;
        let agg = out.report.aggregate;
        let (_, _, cf_w, cf_m) = majority_closed_form(share, classes);
        ensure(
            (agg.f1_weighted.mean - cf_w).abs() <= 1e-3 && (agg.f1_macro.mean - cf_m).abs() <= 1e-3,
            format!("{classes} classes: pipeline disagrees with closed form"),
        )?;
        details.push(format!(
            "{classes} classes: f1w {:.4} (want {want_w}), f1m {:.4} (want {want_m})",
            agg.f1_weighted.mean, agg.f1_macro.mean
        ));
        if (agg.f1_weighted.mean - want_w).abs() > 0.005 {
            problems.push(format!("{classes} classes f1w {:.4} outside {want_w} ± 0.005", agg.f1_weighted.mean));
        }
        if (agg.f1_macro.mean - want_m).abs() > 0.005 {
            problems.push(format!("{classes} classes f1m {:.4} outside {want_m} ± 0.005", agg.f1_macro.mean));
        }
    }
    if problems.is_empty() {
        Ok(details.join("; "))
    } else {
        Err(problems.join("; "))
    }
}

fn kmer_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seqs: Vec<String> = (0..1000).map(|_| common::random_residues(&mut rng, 1273)).collect();
    let spec = KmerSpec::new(3).map_err(|e| e.to_string())?;
    let start = Instant::now();
    for (i, s) in seqs.iter().enumerate() {
        let v = kmer_vector(&format!("s{i}"), s, &spec).map_err(|e| e.to_string())?;
        ensure(v.dim == 9261, format!("dimension {}", v.dim))?;
        ensure(v.sum() == 1271.0, format!("sequence {i} sums to {}", v.sum()))?;
    }
    let elapsed = start.elapsed();
    ensure(kmers("MDPEG", 3) == ["MDP", "DPE", "PEG"], "k=3 decomposition")?;
    ensure(kmers("MDPEG", 4) == ["MDPE", "DPEG"], "k=4 decomposition")?;
    ensure(kmers("MDPEG", 5) == ["MDPEG"], "k=5 decomposition")?;
    within_time(elapsed, 1.0)?;
    Ok(format!("1000 x 1271, dim 9261, MDPEG k=3/4/5 exact, {:.3}s", elapsed.as_secs_f64()))
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rff_fidelity() -> Outcome {
    const DIM: usize = 32;
    const GAMMA: f64 = 0.5;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..100).map(|_| (unit_vector(&mut rng, DIM), unit_vector(&mut rng, DIM))).collect();
    let rmse = |d: usize| -> Result<f64, String> {
        let proj = RffProjector::new(DIM, d, GAMMA, 7).map_err(|e| e.to_string())?;
        let mut sq = 0.0;
        for (a, b) in &pairs {
            let approx = dot(&proj.project(a).unwrap(), &proj.project(b).unwrap());
            sq += (approx - exact_kernel(a, b, GAMMA).unwrap()).powi(2);
        }
        Ok((sq / pairs.len() as f64).sqrt())
    };
    let (small, large) = (rmse(256)?, rmse(4096)?);
    ensure(large < 0.5 * small, format!("RMSE {large:.4} at D=4096 not below half of {small:.4} at D=256"))?;
    ensure(small < 0.1 && large < 0.1, format!("RMSE {small:.4} / {large:.4} not below 0.1"))?;
    let mut good = 0;
    for seed in 0..100 {
        let proj = RffProjector::new(DIM, 4096, GAMMA, seed).map_err(|e| e.to_string())?;
        let a = unit_vector(&mut ChaCha8Rng::seed_from_u64(1000 + seed), DIM);
        let z = proj.project(&a).unwrap();
        if (dot(&z, &z) - 1.0).abs() <= 0.1 {
            good += 1;
        }
    }
    ensure(good >= 95, format!("self-kernel within 0.1 for only {good}/100 seeds"))?;
    within_time(start.elapsed(), 30.0)?;
    Ok(format!(
        "RMSE {small:.4} (D=256) vs {large:.4} (D=4096), self-kernel {good}/100, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let nn = (0..50).map(common::gradcheck::nn_instance).fold(0.0, f64::max);
    let lr = (0..50).map(common::gradcheck::logreg_instance).fold(0.0, f64::max);
    ensure(nn <= 1e-4, format!("NN worst relative error {nn:e}"))?;
    ensure(lr <= 1e-4, format!("LR worst relative error {lr:e}"))?;
    within_time(start.elapsed(), 30.0)?;
    Ok(format!("worst relative error NN {nn:.1e}, LR {lr:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

fn learnability() -> Outcome {
    let start = Instant::now();
    let data = common::motif_corpus(5000, &[0.4, 0.3, 0.2, 0.1], 5, 3, 100, 42);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = [("train_fraction", "0.5"), ("runs", "1")];
    let accuracy = |model: &str, extra: &[(&str, &str)]| -> Result<f64, String> {
        let mut settings = base.to_vec();
        settings.push(("model", model));
        settings.extend_from_slice(extra);
        Ok(run_pipeline(dir.path(), &data, &settings)?.report.aggregate.accuracy.mean)
    };
    let majority = accuracy("majority", &[])?;
    let nn = accuracy("nn", &[("nn_hidden_width", "128")])?;
    let lr = accuracy("lr", &[("use_rff", "false")])?;
    let ridge = accuracy("ridge", &[("use_rff", "false")])?;
    let summary = format!("MAJORITY {majority:.3}, NN {nn:.3}, LR {lr:.3}, ridge {ridge:.3}");
    ensure(nn >= 0.95 && nn > majority, format!("{summary}: NN below 0.95 or not above MAJORITY"))?;
    ensure(lr >= 0.85 && ridge >= 0.85, format!("{summary}: LR or ridge below 0.85"))?;
    within_time(start.elapsed(), 300.0)?;
    Ok(format!("{summary}, {:.1}s", start.elapsed().as_secs_f64()))
}

/// Scores every class by counting label pairs directly.
fn summary_oracle(y_true: &[usize], y_pred: &[usize], classes: usize) -> Summary {
    let n = y_true.len() as f64;
    let mut precision = Vec::new();
    let mut recall = Vec::new();
    let mut f1 = Vec::new();
    let mut support = Vec::new();
    for k in 0..classes {
        let tp = y_true.iter().zip(y_pred).filter(|&(&t, &p)| t == k && p == k).count();
        let predicted = y_pred.iter().filter(|&&p| p == k).count();
        let actual = y_true.iter().filter(|&&t| t == k).count();
        let p = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let r = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
        precision.push(p);
        recall.push(r);
        f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        support.push(actual);
    }
    let weighted = |v: &[f64]| -> f64 { v.iter().zip(&support).map(|(x, &w)| x * w as f64 / n).sum() };
    let correct = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Summary {
        accuracy: correct as f64 / n,
        precision_weighted: weighted(&precision),
        recall_weighted: weighted(&recall),
        f1_weighted: weighted(&f1),
        f1_macro: f1.iter().sum::<f64>() / classes as f64,
    }
}

/// One-vs-rest AUC by comparing every positive/negative pair.
fn auc_oracle(scores: &DenseMatrix, y_true: &[usize]) -> f64 {
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for k in 0..scores.ncols() {
        let pos: Vec<usize> = (0..y_true.len()).filter(|&i| y_true[i] == k).collect();
        let neg: Vec<usize> = (0..y_true.len()).filter(|&i| y_true[i] != k).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut twice_wins: u64 = 0;
        for &i in &pos {
            for &j in &neg {
                let (a, b) = (scores.get(i, k), scores.get(j, k));
                twice_wins += if a > b { 2 } else if a == b { 1 } else { 0 };
            }
        }
        let auc = twice_wins as f64 / (2 * pos.len() * neg.len()) as f64;
        weighted += pos.len() as f64 * auc;
        weight += pos.len() as f64;
    }
    weighted / weight
}

fn metrics_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let classes = rng.random_range(2..=5);
        let n = rng.random_range(2..=40);
        let mut y_true: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        y_true[0] = 0;
        y_true[1] = 1;
        let y_pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let m = ConfusionMatrix::new(&y_true, &y_pred, classes).map_err(|e| e.to_string())?;
        let got = summarize(&m).map_err(|e| e.to_string())?;
        ensure(got == summary_oracle(&y_true, &y_pred, classes), format!("case {case}: summary differs"))?;

        // Coarse scores so ties are common.
        let raw: Vec<f64> = (0..n * classes).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
        let scores = DenseMatrix::from_vec(n, classes, raw).unwrap();
        let auc = roc_auc_ovr_weighted(&scores, &y_true).map_err(|e| e.to_string())?.value;
        let want = auc_oracle(&scores, &y_true);
        ensure(auc == want, format!("case {case}: AUC {auc} vs oracle {want}"))?;
    }
    within_time(start.elapsed(), 10.0)?;
    Ok(format!("200 instances exact, {:.3}s", start.elapsed().as_secs_f64()))
}

fn entropy_of<K: std::hash::Hash + Eq>(items: impl Iterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, usize> = HashMap::new();
    let mut n = 0;
    for k in items {
        *counts.entry(k).or_default() += 1;
        n += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

fn ig_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let symbols = ['A', 'C', 'D', 'E', 'G'];
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(2..=30);
        let len = rng.random_range(1..=8);
        let classes = rng.random_range(2..=4);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let alphabet = rng.random_range(1..=symbols.len());
        let rows: Vec<String> = (0..n)
            .map(|_| (0..len).map(|_| symbols[rng.random_range(0..alphabet)]).collect())
            .collect();
        let data: Vec<LabeledSequence> = rows
            .iter()
            .zip(&labels)
            .enumerate()
            .map(|(i, (r, &c))| common::labeled(&format!("s{i}"), r, &common::class_name(c)))
            .collect();
        let ig = information_gain(&data, ClassLevel::Continent).map_err(|e| e.to_string())?;
        let h_c = entropy_of(labels.iter());
        for p in 0..len {
            let column = || rows.iter().map(move |r| r.as_bytes()[p]);
            let want = h_c + entropy_of(column()) - entropy_of(column().zip(labels.iter()));
            let got = ig.table.rows[p].ig_bits;
            worst = worst.max((got - want).abs());
            ensure((got - want).abs() <= 1e-9, format!("case {case} position {}: {got} vs {want}", p + 1))?;
        }
    }

    // Position 1: the worked example; 2: constant; 3: perfect predictor.
    let examples = [("AGD", "X"), ("AGD", "X"), ("AGE", "Y"), ("CGE", "Y")];
    let data: Vec<LabeledSequence> = examples
        .iter()
        .enumerate()
        .map(|(i, (r, c))| common::labeled(&format!("w{i}"), r, c))
        .collect();
    let ig = information_gain(&data, ClassLevel::Continent).map_err(|e| e.to_string())?;
    let rows = &ig.table.rows;
    ensure((rows[0].ig_bits - 0.3113).abs() <= 1e-4, format!("worked example {}", rows[0].ig_bits))?;
    ensure(rows[1].ig_bits == 0.0, format!("constant position {}", rows[1].ig_bits))?;
    ensure(rows[2].ig_bits == ig.table.class_entropy, format!("perfect predictor {}", rows[2].ig_bits))?;
    within_time(start.elapsed(), 10.0)?;
    Ok(format!(
        "100 corpora, worst deviation {worst:.1e}; worked example {:.4}; constant 0; perfect = H(C); {:.3}s",
        rows[0].ig_bits,
        start.elapsed().as_secs_f64()
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = common::motif_corpus(600, &[0.5, 0.3, 0.2], 5, 3, 60, 9);
    let settings = [("model", "nn"), ("runs", "3"), ("nn_hidden_width", "16"), ("train_fraction", "0.3")];
    let metrics = dir.path().join("out/metrics.json");
    run_pipeline(dir.path(), &data, &settings)?;
    let first = fs::read(&metrics).map_err(|e| e.to_string())?;
    run_pipeline(dir.path(), &data, &settings)?;
    let second = fs::read(&metrics).map_err(|e| e.to_string())?;
    ensure(first == second, "metrics.json differs between identical runs")?;
    Ok(format!("metrics.json byte-identical ({} bytes)", first.len()))
}

#[cfg(feature = "parallel")]
fn throughput() -> Outcome {
    const TOTAL: usize = 100_000;
    const CHUNK: usize = 5_000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let data: Vec<LabeledSequence> = (0..TOTAL)
        .map(|i| common::labeled(&format!("t{i}"), &common::random_residues(&mut rng, 1273), "all"))
        .collect();
    let mode = FeatureMode::Kmers(KmerSpec::new(3).map_err(|e| e.to_string())?);
    let timed = |threads: usize| -> Result<f64, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let start = Instant::now();
        pool.install(|| -> Result<(), String> {
            let mut rows = 0;
            for chunk in data.chunks(CHUNK) {
                rows += featurize_rows(chunk, &mode).map_err(|e| e.to_string())?.nrows();
            }
            ensure(rows == TOTAL, format!("featurized {rows} rows"))
        })?;
        Ok(start.elapsed().as_secs_f64())
    };
    let single = timed(1)?;
    let eight = timed(8)?;
    let speedup = single / eight;
    let summary = format!(
        "1 thread {single:.1}s, 8 threads {eight:.1}s, speedup {speedup:.2}x on {} CPU(s)",
        std::thread::available_parallelism().map_or(1, |n| n.get())
    );
    ensure(single < 60.0, format!("{summary}: single-threaded over 60s"))?;
    ensure(speedup >= 3.0, format!("{summary}: speedup below 3x"))?;
    Ok(summary)
}

#[cfg(not(feature = "parallel"))]
fn throughput() -> Outcome {
    Err("built without the `parallel` feature".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 majority baseline, 5 classes", majority_continent),
        ("2 majority baseline, 27 and 12 classes", majority_country),
        ("3 k-mer arithmetic", kmer_arithmetic),
        ("4 RFF fidelity", rff_fidelity),
        ("5 gradient correctness", gradients),
        ("6 learnability ordering", learnability),
        ("7 metrics oracle", metrics_oracle),
        ("8 information gain", ig_correctness),
        ("9 determinism", determinism),
        ("10 featurization throughput", throughput),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
