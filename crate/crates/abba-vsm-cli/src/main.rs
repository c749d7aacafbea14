//! Command-line driver: `compress`, `train`, `predict`, `evaluate`, and
//! `grid-search` over the segment-reduction + symbolic-classification
//! pipeline.
//!
//! Exit codes: 0 on success, 2 on input errors (unreadable or malformed
//! files, unusable data), 3 on infeasible configurations (parameters out of
//! range, impossible splits, empty search spaces).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use abba_vsm::config::search_grid;
use abba_vsm::pipeline::{self, GridSearchOptions};
use abba_vsm::{
    load_ucr, read_model, read_segments, write_model, ClusterType, Dataset, Delimiter, Error,
    PipelineConfig, SearchSpace, SegmentSequence,
};

#[derive(Parser)]
#[command(
    name = "abba-vsm",
    about = "Adaptive symbolic time series compression and classification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a dataset into a segment stream (.abbaseg)
    Compress(CompressArgs),
    /// Fit a classification model from a dataset or a segment stream
    Train(TrainArgs),
    /// Classify samples with a fitted model
    Predict(PredictArgs),
    /// Split, train, and score one configuration; report metrics
    Evaluate(EvaluateArgs),
    /// Sweep the hyperparameter space and rank configurations
    GridSearch(GridSearchArgs),
}

#[derive(Args)]
struct CompressArgs {
    /// Input dataset (label + values per line, tab or comma separated)
    #[arg(long)]
    input: PathBuf,
    /// Reduction tolerance
    #[arg(long)]
    rt: f64,
    /// Output segment-stream path
    #[arg(long)]
    output: PathBuf,
    /// Name recorded in the stream header (defaults to the input file stem)
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
}

/// Pipeline hyperparameters. Flags override the config file, which overrides
/// the defaults.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Optional TOML file with the same keys as the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reduction tolerance
    #[arg(long)]
    rt: Option<f64>,
    /// Clustering backend: sorting_based | k_means
    #[arg(long)]
    ctype: Option<ClusterType>,
    /// Clustering tolerance (sorting_based)
    #[arg(long)]
    ct: Option<f64>,
    /// Cluster count (k_means)
    #[arg(long)]
    csize: Option<usize>,
    /// Sliding-window word length
    #[arg(long)]
    wsize: Option<usize>,
    /// Sliding-window stride
    #[arg(long)]
    wstep: Option<usize>,
    /// Test fraction of the stratified split
    #[arg(long)]
    tsize: Option<f64>,
    /// Seed for the split and k-means initialization
    #[arg(long)]
    seed: Option<u64>,
    /// Permit parameter values outside the default search bounds
    #[arg(long)]
    allow_any_params: bool,
    /// Map unclassifiable samples to the largest training class
    #[arg(long)]
    fallback_largest_class: bool,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    rt: Option<f64>,
    ctype: Option<ClusterType>,
    ct: Option<f64>,
    csize: Option<usize>,
    wsize: Option<usize>,
    wstep: Option<usize>,
    tsize: Option<f64>,
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, Error> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| {
                    Error::Format(format!("{}: bad config file: {e}", path.display()))
                })?
            }
            None => FileConfig::default(),
        };
        let d = PipelineConfig::default();
        Ok(PipelineConfig {
            rt: self.rt.or(file.rt).unwrap_or(d.rt),
            ctype: self.ctype.or(file.ctype).unwrap_or(d.ctype),
            ct: self.ct.or(file.ct).unwrap_or(d.ct),
            csize: self.csize.or(file.csize).unwrap_or(d.csize),
            wsize: self.wsize.or(file.wsize).unwrap_or(d.wsize),
            wstep: self.wstep.or(file.wstep).unwrap_or(d.wstep),
            tsize: self.tsize.or(file.tsize).unwrap_or(d.tsize),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            fallback_largest_class: self.fallback_largest_class,
            allow_out_of_range: self.allow_any_params,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset or .abbaseg segment stream
    #[arg(long)]
    input: PathBuf,
    /// Output model path (JSON)
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct PredictArgs {
    /// Fitted model path
    #[arg(long)]
    model: PathBuf,
    /// Input dataset or .abbaseg segment stream
    #[arg(long)]
    input: PathBuf,
    /// Output predictions CSV
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    /// Map unclassifiable samples to the largest training class
    #[arg(long)]
    fallback_largest_class: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Input labeled dataset
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    /// Write the full report JSON here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the test-set predictions CSV here
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Also sweep tolerances and write a compression-vs-tolerance table
    #[arg(long)]
    rt_sweep: bool,
    /// Tolerances for the sweep (defaults to the full search grid)
    #[arg(long, value_delimiter = ',')]
    sweep_values: Option<Vec<f64>>,
    /// Output path for the sweep table
    #[arg(long, default_value = "cr_vs_rt.tsv")]
    sweep_output: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct GridSearchArgs {
    /// Input labeled dataset
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    /// Clustering backends to search: both | sorting_based | k_means
    #[arg(long, default_value = "both")]
    ctype: String,
    #[arg(long, value_delimiter = ',')]
    rt_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ct_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    csize_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    wsize_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    wstep_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    tsize_values: Option<Vec<f64>>,
    /// Evaluate only the first N configurations of the enumeration
    #[arg(long)]
    budget: Option<usize>,
    /// Accuracy a configuration must reach to be counted as passing
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Evaluate configurations in parallel (output order is unaffected)
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    fallback_largest_class: bool,
    /// Write the ranked results CSV here
    #[arg(long)]
    results: Option<PathBuf>,
    /// Write the best configuration's row as JSON here
    #[arg(long)]
    best: Option<PathBuf>,
    /// Write the full report (aggregates and all rows) as JSON here
    #[arg(long)]
    report: Option<PathBuf>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Format(_)
        | Error::EmptyDataset(_)
        | Error::EmptyInput(_)
        | Error::InvalidInput(_)
        | Error::MissingLabel { .. }
        | Error::SingleClassCorpus(_) => 2,
        Error::InvalidParams(_) | Error::SplitInfeasible(_) | Error::EmptySearchSpace(_) => 3,
    }
}

fn is_segment_stream(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "abbaseg")
}

fn load_dataset(path: &Path, delimiter: Delimiter, name: Option<&str>) -> Result<Dataset, Error> {
    let mut ds = load_ucr(path, delimiter)?;
    if let Some(name) = name {
        ds.name = name.to_string();
    }
    Ok(ds)
}

fn cmd_compress(args: &CompressArgs) -> Result<(), Error> {
    let ds = load_dataset(&args.input, args.delimiter, args.dataset_name.as_deref())?;
    let stats = pipeline::compress_dataset(&ds, args.rt, &ds.name, &args.output)?;
    println!("wrote {}", args.output.display());
    println!("samples: {}", ds.len());
    println!("bytes_written: {}", stats.bytes_written);
    println!(
        "raw_equivalent_bytes: {}",
        stats.payload.raw_equivalent_bytes
    );
    println!(
        "segment_payload_bytes: {}",
        stats.payload.segment_payload_bytes
    );
    println!("reduction_percent: {:.2}", stats.payload.reduction_percent);
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Error> {
    let cfg = args.config.resolve()?;
    cfg.validate()?;

    let (model, mut summary) = if is_segment_stream(&args.input) {
        let (seqs, header) = read_segments(&args.input)?;
        let name = args.dataset_name.clone().unwrap_or(header.dataset_name);
        let (model, mut summary) = pipeline::train_from_sequences(&seqs, &cfg, &name)?;
        summary
            .warnings
            .extend(pipeline::rt_mismatch_warning(header.rt, cfg.rt));
        (model, summary)
    } else {
        let ds = load_dataset(&args.input, args.delimiter, args.dataset_name.as_deref())?;
        pipeline::train_dataset(&ds, &cfg)?
    };

    write_model(&model, &args.model)?;
    for w in summary.warnings.drain(..) {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", args.model.display());
    println!("alphabet_size: {}", summary.alphabet_size);
    println!("vocab_size: {}", summary.vocab_size);
    for (label, total) in &summary.class_doc_totals {
        println!("class {label}: {total} terms");
    }
    Ok(())
}

fn load_sequences_for_model(
    args_input: &Path,
    delimiter: Delimiter,
    model_rt: f64,
) -> Result<(Vec<SegmentSequence>, Option<String>), Error> {
    if is_segment_stream(args_input) {
        let (seqs, header) = read_segments(args_input)?;
        Ok((seqs, pipeline::rt_mismatch_warning(header.rt, model_rt)))
    } else {
        let ds = load_ucr(args_input, delimiter)?;
        Ok((pipeline::reduce_dataset(&ds, model_rt)?, None))
    }
}

fn cmd_predict(args: &PredictArgs) -> Result<(), Error> {
    let model = read_model(&args.model)?;
    let (seqs, warning) = load_sequences_for_model(&args.input, args.delimiter, model.rt)?;
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    let rows = pipeline::predict_sequences(&model, &seqs, args.fallback_largest_class);
    pipeline::write_predictions_csv(&rows, &model.class_labels, &args.output)?;
    let unclassifiable = rows.iter().filter(|r| r.unclassifiable).count();
    println!("wrote {}", args.output.display());
    println!("samples: {}", rows.len());
    println!("unclassifiable: {unclassifiable}");
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), Error> {
    let cfg = args.config.resolve()?;
    let ds = load_dataset(&args.input, args.delimiter, args.dataset_name.as_deref())?;
    let outcome = pipeline::evaluate(&ds, &cfg)?;
    let report = &outcome.report;

    if let Some(path) = &args.predictions {
        pipeline::write_predictions_csv(&outcome.predictions, &class_labels_of(&ds), path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(report)
            .map_err(|e| Error::Format(format!("report encoding failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path.clone(), e))?;
        println!("wrote {}", path.display());
    }

    println!("dataset: {}", report.dataset);
    println!(
        "split: {} train / {} test (tsize {}, seed {})",
        report.train_samples, report.test_samples, cfg.tsize, cfg.seed
    );
    println!(
        "accuracy: {:.4} ({}/{})",
        report.accuracy, report.correct, report.test_samples
    );
    println!("unclassifiable: {}", report.unclassifiable_count);
    println!("mean_cr: {:.4}", report.mean_cr);
    println!("mean_segment_fraction: {:.4}", report.mean_segment_fraction);
    println!(
        "timing: compressor {:.3}s, classifier {:.3}s (train {:.3}s + test {:.3}s)",
        report.timing.compressor_seconds,
        report.timing.classifier_seconds,
        report.timing.train_seconds,
        report.timing.test_seconds
    );

    if args.rt_sweep {
        let values = args
            .sweep_values
            .clone()
            .unwrap_or_else(|| search_grid::RT.to_vec());
        let rows = pipeline::rt_sweep(&ds, &values)?;
        pipeline::write_sweep_tsv(&rows, &args.sweep_output)?;
        println!("wrote {}", args.sweep_output.display());
    }
    Ok(())
}

fn class_labels_of(ds: &Dataset) -> Vec<String> {
    ds.class_labels.clone()
}

fn cmd_grid_search(args: &GridSearchArgs) -> Result<(), Error> {
    let ctypes = match args.ctype.as_str() {
        "both" => vec![ClusterType::SortingBased, ClusterType::KMeans],
        other => vec![other.parse()?],
    };
    let default = SearchSpace::default();
    let space = SearchSpace {
        ctypes,
        rts: args.rt_values.clone().unwrap_or(default.rts),
        cts: args.ct_values.clone().unwrap_or(default.cts),
        csizes: args.csize_values.clone().unwrap_or(default.csizes),
        wsizes: args.wsize_values.clone().unwrap_or(default.wsizes),
        wsteps: args.wstep_values.clone().unwrap_or(default.wsteps),
        tsizes: args.tsize_values.clone().unwrap_or(default.tsizes),
    };
    let opts = GridSearchOptions {
        seed: args.seed,
        budget: args.budget,
        threshold: args.threshold,
        parallel: args.parallel,
        fallback_largest_class: args.fallback_largest_class,
    };

    let ds = load_dataset(&args.input, args.delimiter, args.dataset_name.as_deref())?;
    let report = pipeline::grid_search(&ds, &space, &opts)?;

    if let Some(path) = &args.results {
        pipeline::write_grid_csv(&report, path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.best {
        let text = serde_json::to_string_pretty(&report.best)
            .map_err(|e| Error::Format(format!("best-config encoding failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path.clone(), e))?;
        println!("wrote {}", path.display());
    }

    println!("dataset: {}", report.dataset);
    println!("configs_evaluated: {}", report.configs_evaluated);
    println!(
        "passing_count: {} (accuracy >= {})",
        report.passing_count, report.threshold
    );
    let b = &report.best;
    let backend = match b.config.ctype {
        ClusterType::SortingBased => format!("sorting_based ct={}", b.config.ct),
        ClusterType::KMeans => format!("k_means csize={}", b.config.csize),
    };
    println!(
        "best: accuracy {:.4}, mean_cr {:.4}, mean_segment_fraction {:.4} \
         (rt={}, {}, wsize={}, wstep={}, tsize={})",
        b.accuracy,
        b.mean_cr,
        b.mean_segment_fraction,
        b.config.rt,
        backend,
        b.config.wsize,
        b.config.wstep,
        b.config.tsize
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compress(args) => cmd_compress(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::GridSearch(args) => cmd_grid_search(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
