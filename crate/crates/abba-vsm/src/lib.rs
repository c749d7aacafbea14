//! Adaptive symbolic time series classification.
//!
//! A univariate series is greedily reduced into tolerance-bounded linear
//! segments (the compressor side), the segments are clustered and replaced by
//! symbols, a sliding window over each symbol string yields a bag of words,
//! and per-class TF-IDF vectors classify unlabeled samples by cosine
//! similarity (the classifier side). The two sides meet at a JSON-lines
//! segment-stream file, standing in for the link between a sensing device
//! and the node that trains and serves the model.
//!
//! Modules follow the pipeline stages:
//!
//! - [`ingest`]: dataset loading and deterministic stratified splits
//! - [`reducer`]: segment reduction, reconstruction, compression metrics
//! - [`wire`]: the `.abbaseg` segment-stream file
//! - [`quantizer`]: segment normalization, clustering, symbol assignment
//! - [`vsm`]: windowing, TF-IDF weights, cosine classification, model files
//! - [`pipeline`]: train / predict / evaluate / grid-search orchestration
//! - [`config`]: hyperparameters and the default search space

pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod quantizer;
pub mod reducer;
pub mod vsm;
pub mod wire;

pub use config::{ClusterType, PipelineConfig, SearchSpace};
pub use error::{Error, Result};
pub use ingest::{load_ucr, stratified_split, Dataset, Delimiter, SplitSpec, TimeSeriesSample};
pub use quantizer::{fit_codebook, symbolize, Codebook, SymbolId, SymbolString};
pub use reducer::{reconstruct, reduce, ReductionParams, Segment, SegmentSequence};
pub use vsm::{read_model, write_model, VsmModel};
pub use wire::{read_segments, write_segments, WireMeta, WireStats};
