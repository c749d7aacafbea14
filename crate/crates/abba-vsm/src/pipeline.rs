//! End-to-end orchestration: compress, train, predict, evaluate, and the
//! hyperparameter grid search.
//!
//! Evaluation timing is split the way the work is split between the two
//! sides of the wire: `compressor_seconds` covers reduction of every sample,
//! `classifier_seconds` covers codebook and model fitting plus test-set
//! classification. `total_seconds` is their sum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, SearchSpace};
use crate::error::{Error, Result};
use crate::ingest::{split_indices, Dataset, SplitSpec};
use crate::quantizer::{fit_codebook, symbolize, SymbolString};
use crate::reducer::{compression_ratio, reduce, ReductionParams, SegmentSequence};
use crate::vsm::{bag_of_words, build_corpus, fit_tfidf, VsmModel};
use crate::wire::{payload_stats, write_segments, PayloadStats, WireMeta, WireStats};

/// Reduces every sample of a dataset with the given tolerance.
pub fn reduce_dataset(ds: &Dataset, rt: f64) -> Result<Vec<SegmentSequence>> {
    let params = ReductionParams::new(rt)?;
    ds.samples.iter().map(|s| reduce(s, &params)).collect()
}

/// Reduces a dataset and writes the segment stream to `path`.
pub fn compress_dataset(
    ds: &Dataset,
    rt: f64,
    dataset_name: &str,
    path: impl AsRef<Path>,
) -> Result<WireStats> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.name.clone()));
    }
    let seqs = reduce_dataset(ds, rt)?;
    write_segments(
        &seqs,
        &WireMeta {
            dataset_name: dataset_name.to_string(),
            rt,
        },
        path,
    )
}

/// What `train` reports besides the model itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub vocab_size: usize,
    pub alphabet_size: usize,
    pub class_doc_totals: Vec<(String, u64)>,
    pub warnings: Vec<String>,
}

/// Fits codebook and TF-IDF weights on already-reduced training sequences.
pub fn train_from_sequences(
    seqs: &[SegmentSequence],
    cfg: &PipelineConfig,
    dataset_name: &str,
) -> Result<(VsmModel, TrainSummary)> {
    cfg.validate()?;
    if seqs.is_empty() {
        return Err(Error::EmptyDataset("no training sequences".into()));
    }
    let codebook = fit_codebook(seqs, &cfg.cluster_params())?;
    let strings: Vec<SymbolString> = seqs.iter().map(|s| symbolize(s, &codebook)).collect();
    let bags = strings
        .iter()
        .map(|s| bag_of_words(s, cfg.wsize, cfg.wstep))
        .collect::<Result<Vec<_>>>()?;
    let corpus = build_corpus(&bags)?;
    let tfidf = fit_tfidf(&corpus);

    let summary = TrainSummary {
        vocab_size: tfidf.vocabulary.len(),
        alphabet_size: codebook.alphabet_size(),
        class_doc_totals: tfidf
            .class_labels
            .iter()
            .cloned()
            .zip(tfidf.class_term_totals.iter().copied())
            .collect(),
        warnings: Vec::new(),
    };
    let model = VsmModel::assemble(
        tfidf,
        codebook,
        cfg.wsize,
        cfg.wstep,
        cfg.rt,
        dataset_name.to_string(),
        cfg.seed,
    );
    Ok((model, summary))
}

/// Reduces a labeled dataset and trains on all of it.
pub fn train_dataset(ds: &Dataset, cfg: &PipelineConfig) -> Result<(VsmModel, TrainSummary)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.name.clone()));
    }
    let seqs = reduce_dataset(ds, cfg.rt)?;
    train_from_sequences(&seqs, cfg, &ds.name)
}

/// Warning raised when a segment stream was produced with a different
/// tolerance than the one configured for this run.
pub fn rt_mismatch_warning(stream_rt: f64, config_rt: f64) -> Option<String> {
    (stream_rt.to_bits() != config_rt.to_bits()).then(|| {
        format!(
            "segment stream was reduced with rt={stream_rt} but rt={config_rt} is configured; \
             the stream's segmentation is kept as-is"
        )
    })
}

/// One classified sample, with the truth label when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sample_id: u64,
    pub truth: Option<String>,
    pub predicted: Option<String>,
    pub unclassifiable: bool,
    pub scores: Vec<f64>,
}

/// Symbolizes and classifies already-reduced sequences with a fitted model.
pub fn predict_sequences(
    model: &VsmModel,
    seqs: &[SegmentSequence],
    fallback_largest_class: bool,
) -> Vec<PredictionRow> {
    let strings: Vec<SymbolString> = seqs.iter().map(|s| symbolize(s, &model.codebook)).collect();
    let classified = model.classify_all(&strings, fallback_largest_class);
    classified
        .into_iter()
        .zip(seqs)
        .map(|(c, seq)| PredictionRow {
            sample_id: c.sample_id,
            truth: seq.label.clone(),
            predicted: c.predicted,
            unclassifiable: c.unclassifiable,
            scores: c.scores,
        })
        .collect()
}

/// Writes predictions as `sample_id,predicted,score_<class>...`. Samples that
/// could not be classified are marked with `?` in the predicted column.
pub fn predictions_csv(rows: &[PredictionRow], class_labels: &[String]) -> String {
    let mut out = String::from("sample_id,predicted");
    for label in class_labels {
        let _ = write!(out, ",score_{label}");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{}",
            row.sample_id,
            row.predicted.as_deref().unwrap_or("?")
        );
        for s in &row.scores {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

pub fn write_predictions_csv(
    rows: &[PredictionRow],
    class_labels: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, predictions_csv(rows, class_labels)).map_err(|e| Error::io(path, e))
}

/// Wall-time decomposition of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalTiming {
    pub compressor_seconds: f64,
    pub classifier_seconds: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
    pub total_seconds: f64,
}

/// Metrics of one configuration on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub config: PipelineConfig,
    pub train_samples: usize,
    pub test_samples: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub unclassifiable_count: usize,
    pub mean_cr: f64,
    pub mean_segment_fraction: f64,
    pub vocab_size: usize,
    pub alphabet_size: usize,
    pub payload: PayloadStats,
    pub timing: EvalTiming,
    pub warnings: Vec<String>,
}

/// An evaluation report plus the per-sample predictions behind it.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub predictions: Vec<PredictionRow>,
}

/// Splits, trains, and scores one configuration end to end.
pub fn evaluate(ds: &Dataset, cfg: &PipelineConfig) -> Result<EvalOutcome> {
    cfg.validate()?;
    let t = Instant::now();
    let seqs = reduce_dataset(ds, cfg.rt)?;
    let compressor_seconds = t.elapsed().as_secs_f64();
    evaluate_reduced(ds, &seqs, cfg, compressor_seconds)
}

/// Evaluation core over precomputed reductions; `compressor_seconds` is the
/// cost of producing them.
pub fn evaluate_reduced(
    ds: &Dataset,
    seqs: &[SegmentSequence],
    cfg: &PipelineConfig,
    compressor_seconds: f64,
) -> Result<EvalOutcome> {
    cfg.validate()?;
    let spec = SplitSpec {
        test_fraction: cfg.tsize,
        seed: cfg.seed,
    };
    let (train_idx, test_idx) = split_indices(ds, &spec)?;

    let t = Instant::now();
    let train_seqs: Vec<SegmentSequence> = train_idx.iter().map(|&i| seqs[i].clone()).collect();
    let (model, summary) = train_from_sequences(&train_seqs, cfg, &ds.name)?;
    let train_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let test_seqs: Vec<SegmentSequence> = test_idx.iter().map(|&i| seqs[i].clone()).collect();
    let predictions = predict_sequences(&model, &test_seqs, cfg.fallback_largest_class);
    let test_seconds = t.elapsed().as_secs_f64();

    let correct = predictions
        .iter()
        .filter(|p| p.predicted.is_some() && p.predicted == p.truth)
        .count();
    let unclassifiable_count = predictions.iter().filter(|p| p.unclassifiable).count();
    let accuracy = correct as f64 / predictions.len() as f64;

    let (mut cr_sum, mut sf_sum) = (0.0, 0.0);
    for seq in seqs {
        let stats = compression_ratio(seq, seq.segments.len());
        cr_sum += stats.cr;
        sf_sum += stats.segment_fraction;
    }
    let n = seqs.len() as f64;

    let classifier_seconds = train_seconds + test_seconds;
    let report = EvalReport {
        dataset: ds.name.clone(),
        config: cfg.clone(),
        train_samples: train_idx.len(),
        test_samples: test_idx.len(),
        correct,
        accuracy,
        unclassifiable_count,
        mean_cr: cr_sum / n,
        mean_segment_fraction: sf_sum / n,
        vocab_size: summary.vocab_size,
        alphabet_size: summary.alphabet_size,
        payload: payload_stats(seqs),
        timing: EvalTiming {
            compressor_seconds,
            classifier_seconds,
            train_seconds,
            test_seconds,
            total_seconds: compressor_seconds + classifier_seconds,
        },
        warnings: summary.warnings,
    };
    Ok(EvalOutcome {
        report,
        predictions,
    })
}

/// One row of the compression-vs-tolerance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rt: f64,
    pub mean_cr: f64,
    pub mean_segment_fraction: f64,
}

/// Mean compression metrics of the whole dataset for each tolerance.
pub fn rt_sweep(ds: &Dataset, rts: &[f64]) -> Result<Vec<SweepRow>> {
    if rts.is_empty() {
        return Err(Error::InvalidParams(
            "rt sweep needs at least one tolerance".into(),
        ));
    }
    let mut rows = Vec::with_capacity(rts.len());
    for &rt in rts {
        let seqs = reduce_dataset(ds, rt)?;
        let n = seqs.len() as f64;
        let (mut cr_sum, mut sf_sum) = (0.0, 0.0);
        for seq in &seqs {
            let stats = compression_ratio(seq, seq.segments.len());
            cr_sum += stats.cr;
            sf_sum += stats.segment_fraction;
        }
        rows.push(SweepRow {
            rt,
            mean_cr: cr_sum / n,
            mean_segment_fraction: sf_sum / n,
        });
    }
    Ok(rows)
}

pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("rt\tmean_cr\tmean_segment_fraction\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.rt, r.mean_cr, r.mean_segment_fraction);
    }
    out
}

pub fn write_sweep_tsv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sweep_tsv(rows)).map_err(|e| Error::io(path, e))
}

/// Grid-search options beyond the space itself.
#[derive(Debug, Clone)]
pub struct GridSearchOptions {
    pub seed: u64,
    /// Evaluate only the first `budget` configurations of the enumeration.
    pub budget: Option<usize>,
    /// Accuracy level a configuration must reach to be counted as passing.
    pub threshold: f64,
    pub parallel: bool,
    pub fallback_largest_class: bool,
}

impl Default for GridSearchOptions {
    fn default() -> Self {
        GridSearchOptions {
            seed: 42,
            budget: None,
            threshold: 0.8,
            parallel: false,
            fallback_largest_class: false,
        }
    }
}

/// One evaluated configuration in the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    /// Position in the deterministic enumeration order.
    pub enum_index: usize,
    pub config: PipelineConfig,
    pub accuracy: f64,
    pub mean_cr: f64,
    pub mean_segment_fraction: f64,
    pub unclassifiable_count: usize,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// How often each value of one hyperparameter appears among the passing
/// configurations. Values keep their enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCounts {
    pub dimension: String,
    /// `(value, passing count, evaluated count)` per distinct value.
    pub counts: Vec<(String, usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub dataset: String,
    pub configs_evaluated: usize,
    pub threshold: f64,
    /// Configurations with accuracy at or above the threshold.
    pub passing_count: usize,
    pub best: GridRow,
    /// Per-hyperparameter breakdown of where the passing configurations sit.
    pub passing_by_value: Vec<DimensionCounts>,
    /// All rows, sorted by accuracy descending, then mean compression ratio
    /// descending, then enumeration order.
    pub rows: Vec<GridRow>,
}

/// Tallies passing/evaluated configurations per hyperparameter value. The
/// backend parameter is only counted for rows where it is active.
fn passing_aggregates(rows: &[GridRow], threshold: f64) -> Vec<DimensionCounts> {
    let mut ordered: Vec<&GridRow> = rows.iter().collect();
    ordered.sort_by_key(|r| r.enum_index);

    let dims: [(&str, fn(&PipelineConfig) -> Option<String>); 7] = [
        ("ctype", |c| Some(c.ctype.to_string())),
        ("rt", |c| Some(c.rt.to_string())),
        ("ct", |c| {
            (c.ctype == crate::config::ClusterType::SortingBased).then(|| c.ct.to_string())
        }),
        ("csize", |c| {
            (c.ctype == crate::config::ClusterType::KMeans).then(|| c.csize.to_string())
        }),
        ("wsize", |c| Some(c.wsize.to_string())),
        ("wstep", |c| Some(c.wstep.to_string())),
        ("tsize", |c| Some(c.tsize.to_string())),
    ];

    dims.iter()
        .map(|(dimension, value_of)| {
            let mut values: Vec<String> = Vec::new();
            let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
            for row in &ordered {
                if let Some(v) = value_of(&row.config) {
                    let entry = counts.entry(v.clone()).or_insert_with(|| {
                        values.push(v);
                        (0, 0)
                    });
                    entry.1 += 1;
                    if row.accuracy >= threshold {
                        entry.0 += 1;
                    }
                }
            }
            DimensionCounts {
                dimension: dimension.to_string(),
                counts: values
                    .into_iter()
                    .map(|v| {
                        let (pass, total) = counts[&v];
                        (v, pass, total)
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Exhaustive (or budget-capped) sweep over the search space. Every
/// configuration is evaluated with the same seed; reductions are shared
/// across configurations with equal tolerance.
pub fn grid_search(
    ds: &Dataset,
    space: &SearchSpace,
    opts: &GridSearchOptions,
) -> Result<GridSearchReport> {
    let mut configs = space.enumerate(opts.seed)?;
    if let Some(budget) = opts.budget {
        if budget == 0 {
            return Err(Error::InvalidParams(
                "grid-search budget must be at least 1".into(),
            ));
        }
        configs.truncate(budget);
    }
    for cfg in &mut configs {
        cfg.fallback_largest_class = opts.fallback_largest_class;
    }

    // one reduction per distinct tolerance, shared by every config using it
    let mut reductions: BTreeMap<u64, (Arc<Vec<SegmentSequence>>, f64)> = BTreeMap::new();
    for cfg in &configs {
        if let std::collections::btree_map::Entry::Vacant(entry) =
            reductions.entry(cfg.rt.to_bits())
        {
            let t = Instant::now();
            let seqs = reduce_dataset(ds, cfg.rt)?;
            entry.insert((Arc::new(seqs), t.elapsed().as_secs_f64()));
        }
    }

    let run = |(i, cfg): (usize, &PipelineConfig)| -> Result<GridRow> {
        let (seqs, reduce_seconds) = &reductions[&cfg.rt.to_bits()];
        let outcome = evaluate_reduced(ds, seqs, cfg, *reduce_seconds)?;
        let r = outcome.report;
        Ok(GridRow {
            enum_index: i,
            config: cfg.clone(),
            accuracy: r.accuracy,
            mean_cr: r.mean_cr,
            mean_segment_fraction: r.mean_segment_fraction,
            unclassifiable_count: r.unclassifiable_count,
            train_seconds: r.timing.train_seconds,
            test_seconds: r.timing.test_seconds,
        })
    };

    let mut rows: Vec<GridRow> = if opts.parallel {
        configs
            .par_iter()
            .enumerate()
            .map(run)
            .collect::<Result<Vec<_>>>()?
    } else {
        configs
            .iter()
            .enumerate()
            .map(run)
            .collect::<Result<Vec<_>>>()?
    };

    rows.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(b.mean_cr.total_cmp(&a.mean_cr))
            .then(a.enum_index.cmp(&b.enum_index))
    });

    let passing_count = rows.iter().filter(|r| r.accuracy >= opts.threshold).count();
    let best = rows[0].clone();
    let passing_by_value = passing_aggregates(&rows, opts.threshold);
    Ok(GridSearchReport {
        dataset: ds.name.clone(),
        configs_evaluated: rows.len(),
        threshold: opts.threshold,
        passing_count,
        best,
        passing_by_value,
        rows,
    })
}

/// Writes the full grid-search report (aggregates and rows) as JSON.
pub fn write_grid_report(report: &GridSearchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Format(format!("report encoding failed: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Renders grid rows as CSV in their sorted order.
pub fn grid_csv(report: &GridSearchReport) -> String {
    let mut out = String::from(
        "rank,enum_index,ctype,rt,ct,csize,wsize,wstep,tsize,accuracy,mean_cr,\
         mean_segment_fraction,unclassifiable,train_seconds,test_seconds\n",
    );
    for (rank, r) in report.rows.iter().enumerate() {
        let c = &r.config;
        let (ct, csize) = match c.ctype {
            crate::config::ClusterType::SortingBased => (format!("{}", c.ct), String::new()),
            crate::config::ClusterType::KMeans => (String::new(), format!("{}", c.csize)),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            rank + 1,
            r.enum_index,
            c.ctype,
            c.rt,
            ct,
            csize,
            c.wsize,
            c.wstep,
            c.tsize,
            r.accuracy,
            r.mean_cr,
            r.mean_segment_fraction,
            r.unclassifiable_count,
            r.train_seconds,
            r.test_seconds,
        );
    }
    out
}

pub fn write_grid_csv(report: &GridSearchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, grid_csv(report)).map_err(|e| Error::io(path, e))
}
