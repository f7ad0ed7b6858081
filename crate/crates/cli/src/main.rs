//! `genregauge` command-line front end: extract, train, classify, report, synth.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};

use genregauge::batch::{classify_table, extract_paths, file_id_for, BatchError};
use genregauge::classifier::{evaluate_rows, read_results, write_results, ClassifyError, ResultRow};
use genregauge::features::{FeatureError, FeatureVector, Validity};
use genregauge::synth::{generate_corpus_with, CorpusKind};
use genregauge::table::{read_labels, FeatureRow, FeatureTable};
use genregauge::training::{train, FormulaVariant, GenreModel};
use genregauge::wav::read_wav;
use genregauge::{Feature, Parallelism, UNCLASSIFIED};

const THREADS_ENV: &str = "GENREGAUGE_THREADS";

#[derive(Parser)]
#[command(name = "genregauge", version, about = "Audio feature extraction and range-matching genre classification")]
struct Cli {
    /// Run batch work on one thread even when parallelism is available.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract features from WAV files (or directories of them) into a CSV table.
    Extract {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// `file_id,class_label` CSV; defaults to `labels.csv` in an input directory.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Train a model from a labeled feature table.
    Train {
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value = "table_mean")]
        variant: FormulaVariant,
    },
    /// Classify WAV files or a feature table against a model.
    Classify {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Summarize a results table that carries actual classes.
    Report { results: PathBuf },
    /// Generate a labeled synthetic corpus.
    Synth {
        n_classes: usize,
        files_per_class: usize,
        seed: u64,
        out_dir: PathBuf,
        /// Draw every file from the class band interiors (no band-edge files),
        /// for evaluation sets that must not overlap a training corpus.
        #[arg(long)]
        held_out: bool,
    },
}

fn data_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::anyhow!(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let mode = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    };
    match run(cli.command, mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| data_err(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cmd: Command, mode: Parallelism) -> Result<()> {
    match cmd {
        Command::Extract {
            inputs,
            out,
            labels,
        } => cmd_extract(&inputs, &out, labels.as_deref(), mode),
        Command::Train {
            features,
            out,
            k,
            variant,
        } => cmd_train(&features, &out, k, variant, mode),
        Command::Classify {
            inputs,
            model,
            out,
            labels,
        } => cmd_classify(&inputs, &model, &out, labels.as_deref(), mode),
        Command::Report { results } => cmd_report(&results),
        Command::Synth {
            n_classes,
            files_per_class,
            seed,
            out_dir,
            held_out,
        } => {
            let kind = if held_out {
                CorpusKind::HeldOut
            } else {
                CorpusKind::Training
            };
            cmd_synth(n_classes, files_per_class, seed, kind, &out_dir)
        }
    }
}

/// Expands directories to their `.wav` entries and sorts the result.
fn collect_wavs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for entry in std::fs::read_dir(p).with_context(|| format!("reading {}", p.display()))? {
                let path = entry?.path();
                let is_wav = path
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
                if is_wav && path.is_file() {
                    out.push(path);
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Explicit labels file, else the first `labels.csv` inside an input directory.
fn load_labels(inputs: &[PathBuf], explicit: Option<&Path>) -> Result<BTreeMap<String, String>> {
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => inputs
            .iter()
            .filter(|p| p.is_dir())
            .map(|p| p.join("labels.csv"))
            .find(|p| p.is_file()),
    };
    match path {
        Some(p) => read_labels(&p)
            .map_err(|e| data_err(format!("labels {}: {e}", p.display()))),
        None => Ok(BTreeMap::new()),
    }
}

/// Row for an all-zero file: duration, sampling rate and the zero RMS stay
/// valid, every other field is flagged invalid.
fn silent_vector(path: &Path) -> Option<FeatureVector> {
    let buf = read_wav(path).ok()?;
    let mut values = [0.0; Feature::COUNT];
    values[Feature::SamplingRate.index()] = f64::from(buf.sample_rate_hz());
    values[Feature::TemporalLength.index()] = buf.duration_s();
    let mut validity = Validity::ALL_VALID;
    for f in Feature::ALL {
        if !matches!(f, Feature::SamplingRate | Feature::TemporalLength | Feature::RmsEnergy) {
            validity.set(f, false);
        }
    }
    Some(FeatureVector::from_values(values, validity))
}

fn extract_table(
    inputs: &[PathBuf],
    labels: &BTreeMap<String, String>,
    mode: Parallelism,
) -> Result<FeatureTable> {
    let paths = collect_wavs(inputs)?;
    if paths.is_empty() {
        return Err(data_err("no WAV inputs found"));
    }
    let mut rows = Vec::with_capacity(paths.len());
    for (path, result) in paths.iter().zip(extract_paths(&paths, mode)) {
        let vector = match result {
            Ok(v) => v,
            Err(BatchError::Feature(FeatureError::AllSilent)) => {
                warn!("{}: silent, features flagged invalid", path.display());
                match silent_vector(path) {
                    Some(v) => v,
                    None => continue,
                }
            }
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        let file_id = file_id_for(path);
        rows.push(FeatureRow {
            class_label: labels.get(&file_id).cloned(),
            file_id,
            vector,
        });
    }
    if rows.is_empty() {
        return Err(data_err("none of the inputs could be read"));
    }
    FeatureTable::new(rows).map_err(|e| data_err(e.to_string()))
}

fn cmd_extract(
    inputs: &[PathBuf],
    out: &Path,
    labels: Option<&Path>,
    mode: Parallelism,
) -> Result<()> {
    let labels = load_labels(inputs, labels)?;
    let table = extract_table(inputs, &labels, mode)?;
    table
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    info!("wrote {} rows to {}", table.len(), out.display());
    Ok(())
}

fn load_table(path: &Path) -> Result<FeatureTable> {
    FeatureTable::load(path).map_err(|e| data_err(format!("{}: {e}", path.display())))
}

fn cmd_train(
    features: &Path,
    out: &Path,
    k: usize,
    variant: FormulaVariant,
    mode: Parallelism,
) -> Result<()> {
    let table = load_table(features)?;
    let model = train(&table, k, variant, mode)?;
    model
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    print!("{}", model.matrix.render());
    println!();
    println!(
        "Selected features: {}",
        model
            .selected_features
            .iter()
            .map(|f| f.label())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn is_feature_table(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn cmd_classify(
    inputs: &[PathBuf],
    model_path: &Path,
    out: &Path,
    labels: Option<&Path>,
    mode: Parallelism,
) -> Result<()> {
    let model = GenreModel::load(model_path)
        .map_err(|e| data_err(format!("model {}: {e}", model_path.display())))?;
    let table = if inputs.len() == 1 && is_feature_table(&inputs[0]) {
        load_table(&inputs[0])?
    } else {
        let labels = load_labels(inputs, labels)?;
        extract_table(inputs, &labels, mode)?
    };

    let mut rows = Vec::with_capacity(table.len());
    for (row, result) in table.rows().iter().zip(classify_table(&table, &model, mode)) {
        let actual = row.class_label.clone();
        match result {
            Ok(r) => rows.push(ResultRow::from_result(&r, actual)),
            Err(ClassifyError::MissingFeature(f)) => {
                warn!("{}: {} is invalid, left unclassified", row.file_id, f.name());
                rows.push(ResultRow {
                    file_id: row.file_id.clone(),
                    predicted: UNCLASSIFIED.to_string(),
                    actual,
                    distance_best: f64::INFINITY,
                    used_features: model.selected_features.clone(),
                });
            }
            Err(e) => return Err(data_err(format!("{}: {e}", row.file_id))),
        }
    }
    let file = File::create(out).with_context(|| format!("writing {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_results(&rows, &mut w)?;
    w.flush()?;
    for r in &rows {
        println!("{}\t{}", r.file_id, r.predicted);
    }
    Ok(())
}

fn cmd_report(path: &Path) -> Result<()> {
    let file = File::open(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let rows = read_results(file).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let report = evaluate_rows(&rows).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    print!("{}", report.render());
    Ok(())
}

fn cmd_synth(
    n_classes: usize,
    files_per_class: usize,
    seed: u64,
    kind: CorpusKind,
    out_dir: &Path,
) -> Result<()> {
    let manifest = generate_corpus_with(n_classes, files_per_class, seed, kind, out_dir)?;
    println!(
        "wrote {} files and {}",
        manifest.wav_paths.len(),
        manifest.labels_path.display()
    );
    if kind == CorpusKind::Training && files_per_class < 4 {
        warn!("{files_per_class} files per class is too few for tertile binning in training");
    }
    Ok(())
}
