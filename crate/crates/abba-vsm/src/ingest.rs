//! Loading UCR-archive-style datasets and deterministic stratified splits.
//!
//! The on-disk format is one sample per line: the first field is the class
//! label (kept verbatim as a string), the remaining fields are float values.
//! Tab and comma delimiters are supported and auto-detected from the first
//! non-blank line. Blank lines are skipped and a trailing delimiter at the
//! end of a line is tolerated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A labeled or unlabeled univariate series with implicit unit-spaced
/// timestamps (index 0..N-1).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    pub sample_id: u64,
    pub label: Option<String>,
    pub values: Vec<f64>,
}

impl TimeSeriesSample {
    /// Checks the loader invariants: at least two points, all finite.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "sample {} has {} values, need at least 2",
                self.sample_id,
                self.values.len()
            )));
        }
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {} has a non-finite value at index {pos}",
                self.sample_id
            )));
        }
        Ok(())
    }
}

/// A named collection of samples plus the sorted set of distinct labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<TimeSeriesSample>,
    pub class_labels: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, deriving `class_labels` from the labeled samples.
    pub fn new(name: impl Into<String>, samples: Vec<TimeSeriesSample>) -> Self {
        let mut labels: Vec<String> = samples.iter().filter_map(|s| s.label.clone()).collect();
        labels.sort();
        labels.dedup();
        Dataset {
            name: name.into(),
            samples,
            class_labels: labels,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Field separator for the text format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Auto,
    Tab,
    Comma,
}

impl Delimiter {
    fn detect(line: &str) -> Result<char> {
        if line.contains('\t') {
            Ok('\t')
        } else if line.contains(',') {
            Ok(',')
        } else {
            Err(Error::Format(
                "cannot detect delimiter: first line contains neither tab nor comma".into(),
            ))
        }
    }
}

impl std::str::FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Delimiter::Auto),
            "tab" => Ok(Delimiter::Tab),
            "comma" => Ok(Delimiter::Comma),
            other => Err(Error::InvalidParams(format!(
                "unknown delimiter {other:?}, expected auto|tab|comma"
            ))),
        }
    }
}

/// Loads a dataset from the one-sample-per-line text format.
///
/// Labels are kept verbatim; values must parse as finite floats and each row
/// must carry at least two of them. `sample_id` is the index of the row among
/// the parsed samples.
pub fn load_ucr(path: impl AsRef<Path>, delimiter: Delimiter) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_ucr_text(&text, &name, delimiter)
}

fn parse_ucr_text(text: &str, name: &str, delimiter: Delimiter) -> Result<Dataset> {
    let mut delim = match delimiter {
        Delimiter::Tab => Some('\t'),
        Delimiter::Comma => Some(','),
        Delimiter::Auto => None,
    };

    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let d = match delim {
            Some(d) => d,
            None => {
                let d = Delimiter::detect(line)?;
                delim = Some(d);
                d
            }
        };

        let mut fields: Vec<&str> = line.split(d).collect();
        // trailing delimiter leaves one empty field at the end
        if fields.last().is_some_and(|f| f.trim().is_empty()) {
            fields.pop();
        }
        if fields.len() < 3 {
            let other = if d == '\t' { ',' } else { '\t' };
            let hint = if line.contains(other) {
                " (inconsistent delimiter?)"
            } else {
                ""
            };
            return Err(Error::Format(format!(
                "line {}: row has fewer than 2 values{hint}",
                lineno + 1
            )));
        }

        let label = fields[0].trim();
        if label.is_empty() {
            return Err(Error::Format(format!("line {}: empty label", lineno + 1)));
        }
        let mut values = Vec::with_capacity(fields.len() - 1);
        for field in &fields[1..] {
            let token = field.trim();
            let v: f64 = token.parse().map_err(|_| {
                Error::Format(format!("line {}: non-numeric value {token:?}", lineno + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Format(format!(
                    "line {}: non-finite value {token:?}",
                    lineno + 1
                )));
            }
            values.push(v);
        }

        samples.push(TimeSeriesSample {
            sample_id: samples.len() as u64,
            label: Some(label.to_string()),
            values,
        });
    }

    if samples.is_empty() {
        return Err(Error::EmptyDataset(format!("{name}: no samples parsed")));
    }
    Ok(Dataset::new(name, samples))
}

/// Writes a dataset back to the text format. Floats use the shortest decimal
/// representation that round-trips, so `load_ucr` recovers identical values.
pub fn write_ucr(ds: &Dataset, path: impl AsRef<Path>, delimiter: Delimiter) -> Result<()> {
    let path = path.as_ref();
    let d = match delimiter {
        Delimiter::Comma => ',',
        _ => '\t',
    };
    let mut out = String::new();
    for s in &ds.samples {
        out.push_str(s.label.as_deref().unwrap_or("?"));
        for v in &s.values {
            let _ = write!(out, "{d}{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Test-fraction and seed for a stratified split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "test_fraction must lie in (0,1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Number of test samples for a class of size `n`: `max(1, ceil(tf * n))`.
/// The ceiling is taken with a small slack so that products that are exact
/// in decimal (0.2 * 10) do not round up through float representation.
fn test_count(n: usize, test_fraction: f64) -> usize {
    let raw = (test_fraction * n as f64 - 1e-9).ceil() as usize;
    raw.max(1)
}

/// Splits sample positions per class. Selection within a class is a
/// ChaCha8 shuffle keyed by `seed` mixed with an FNV-1a hash of the label,
/// so it depends only on (seed, label, sample ids).
pub(crate) fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (pos, s) in ds.samples.iter().enumerate() {
        let label = s.label.as_deref().ok_or(Error::MissingLabel {
            sample_id: s.sample_id,
        })?;
        by_class.entry(label).or_default().push(pos);
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut positions) in by_class {
        let n = positions.len();
        let n_test = test_count(n, spec.test_fraction);
        if n_test >= n {
            return Err(Error::SplitInfeasible(format!(
                "class {label:?} has {n} samples; {n_test} would go to test, leaving no training samples"
            )));
        }
        positions.sort_by_key(|&p| ds.samples[p].sample_id);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ fnv1a64(label.as_bytes()));
        positions.shuffle(&mut rng);
        test.extend_from_slice(&positions[..n_test]);
        train.extend_from_slice(&positions[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified train/test split: per class, `max(1, ceil(test_fraction * n))`
/// samples go to test and the rest to train. Deterministic in (dataset, spec).
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(ds, spec)?;
    let pick = |idx: &[usize]| {
        Dataset::new(
            ds.name.clone(),
            idx.iter().map(|&i| ds.samples[i].clone()).collect(),
        )
    };
    Ok((pick(&train_idx), pick(&test_idx)))
}
