//! Adaptive reduction of a raw series into `(len, inc)` segments.
//!
//! A series is scanned left to right. From the current anchor the segment is
//! extended one point at a time for as long as the straight line from the
//! anchor to the candidate end keeps the squared error within a budget that
//! grows with the segment length:
//!
//! ```text
//! sum_{k=i..j} (yhat_k - y_k)^2 <= (j - i) * rt^2
//! ```
//!
//! where `yhat` is the anchor-to-end line. The first failing extension ends
//! the segment, so every emitted segment is maximal. Endpoints are pinned:
//! a segment stores the exact value change `inc = y_j - y_i`.
//!
//! Each extension is evaluated in O(1) from running sums over the candidate
//! window, so a full reduction is O(N).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TimeSeriesSample;

/// One linear piece: `len` unit time steps with total value change `inc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub len: u32,
    pub inc: f64,
}

/// A reduced sample: the first raw value plus the segment chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSequence {
    pub sample_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub y0: f64,
    pub original_length: usize,
    #[serde(
        serialize_with = "serialize_segments",
        deserialize_with = "deserialize_segments"
    )]
    pub segments: Vec<Segment>,
}

fn serialize_segments<S>(segments: &[Segment], ser: S) -> std::result::Result<S::Ok, S::Error>
where
    S: serde::Serializer,
{
    ser.collect_seq(segments.iter().map(|s| (s.len, s.inc)))
}

fn deserialize_segments<'de, D>(de: D) -> std::result::Result<Vec<Segment>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let pairs = Vec::<(u32, f64)>::deserialize(de)?;
    Ok(pairs
        .into_iter()
        .map(|(len, inc)| Segment { len, inc })
        .collect())
}

impl SegmentSequence {
    /// Checks the structural invariants: finite values, positive lengths,
    /// and segments tiling exactly `original_length - 1` steps.
    pub fn validate(&self) -> Result<()> {
        if self.original_length < 2 {
            return Err(Error::InvalidInput(format!(
                "sequence {}: original_length {} < 2",
                self.sample_id, self.original_length
            )));
        }
        if !self.y0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sequence {}: non-finite y0",
                self.sample_id
            )));
        }
        if self.segments.is_empty() {
            return Err(Error::InvalidInput(format!(
                "sequence {}: no segments",
                self.sample_id
            )));
        }
        let mut total: usize = 0;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.len == 0 {
                return Err(Error::InvalidInput(format!(
                    "sequence {}: segment {i} has zero length",
                    self.sample_id
                )));
            }
            if !seg.inc.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "sequence {}: segment {i} has non-finite increment",
                    self.sample_id
                )));
            }
            total += seg.len as usize;
        }
        if total != self.original_length - 1 {
            return Err(Error::InvalidInput(format!(
                "sequence {}: segments span {total} steps, expected {}",
                self.sample_id,
                self.original_length - 1
            )));
        }
        Ok(())
    }
}

/// Reduction tolerance; the per-step scale of the squared-error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub rt: f64,
}

impl ReductionParams {
    pub fn new(rt: f64) -> Result<Self> {
        let p = ReductionParams { rt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rt.is_finite() && self.rt > 0.0) {
            return Err(Error::InvalidParams(format!(
                "reduction tolerance must be a finite positive number, got {}",
                self.rt
            )));
        }
        Ok(())
    }
}

/// Greedy reduction of a sample into maximal tolerance-bounded segments.
pub fn reduce(sample: &TimeSeriesSample, params: &ReductionParams) -> Result<SegmentSequence> {
    params.validate()?;
    sample.validate()?;

    let y = &sample.values;
    let n = y.len();
    let budget_per_step = params.rt * params.rt;

    let mut segments = Vec::new();
    let mut anchor = 0usize;
    while anchor < n - 1 {
        let y_anchor = y[anchor];
        // Offsets are measured from the anchor: e_t = y[anchor+t] - y_anchor.
        // The line through (0,0) and (L, e_L) has squared error
        //   (e_L/L)^2 * sum(t^2) - 2*(e_L/L) * sum(t*e_t) + sum(e_t^2)
        // over t = 0..=L; the running sums make each extension O(1).
        let mut len = 1usize;
        let mut inc = y[anchor + 1] - y_anchor;
        let mut sum_tt = 1.0;
        let mut sum_te = inc;
        let mut sum_ee = inc * inc;

        while anchor + len < n - 1 {
            let cand = len + 1;
            let t = cand as f64;
            let e = y[anchor + cand] - y_anchor;
            let next_tt = sum_tt + t * t;
            let next_te = sum_te + t * e;
            let next_ee = sum_ee + e * e;
            let slope = e / t;
            let err = slope * slope * next_tt - 2.0 * slope * next_te + next_ee;
            if err <= t * budget_per_step {
                len = cand;
                inc = e;
                sum_tt = next_tt;
                sum_te = next_te;
                sum_ee = next_ee;
            } else {
                break;
            }
        }

        segments.push(Segment {
            len: len as u32,
            inc,
        });
        anchor += len;
    }

    Ok(SegmentSequence {
        sample_id: sample.sample_id,
        label: sample.label.clone(),
        y0: y[0],
        original_length: n,
        segments,
    })
}

/// Rebuilds the polygonal chain described by a segment sequence. Segment
/// boundaries take the exact accumulated values; interior points are linearly
/// interpolated.
pub fn reconstruct(seq: &SegmentSequence) -> TimeSeriesSample {
    debug_assert!(seq.validate().is_ok());
    let mut values = Vec::with_capacity(seq.original_length);
    let mut base = seq.y0;
    values.push(base);
    for seg in &seq.segments {
        let len = seg.len as usize;
        for t in 1..len {
            values.push(base + (t as f64 / len as f64) * seg.inc);
        }
        base += seg.inc;
        values.push(base);
    }
    TimeSeriesSample {
        sample_id: seq.sample_id,
        label: seq.label.clone(),
        values,
    }
}

/// Compression metrics for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionStats {
    /// `1 - symbols/(4*N)`: one byte per symbol against four bytes per raw
    /// float value. Bounded below by 0.75 whenever `symbols <= N`.
    pub cr: f64,
    /// `n/(N-1)`: emitted segments over the maximum possible.
    pub segment_fraction: f64,
}

/// Byte-model compression ratio for a symbolized sample. `symbol_count` is
/// the length of the sample's symbol string and equals the segment count.
pub fn compression_ratio(seq: &SegmentSequence, symbol_count: usize) -> CompressionStats {
    let n = seq.original_length as f64;
    CompressionStats {
        cr: 1.0 - symbol_count as f64 / (4.0 * n),
        segment_fraction: symbol_count as f64 / (n - 1.0),
    }
}

/// Directly evaluates the squared error of the anchor-to-end line over one
/// segment of `values` starting at `anchor`, independently of the running
/// sums that [`reduce`] maintains.
pub fn segment_squared_error(values: &[f64], anchor: usize, seg: &Segment) -> f64 {
    let len = seg.len as usize;
    let slope = seg.inc / len as f64;
    let y_anchor = values[anchor];
    let mut err = 0.0;
    for t in 0..=len {
        let yhat = y_anchor + t as f64 * slope;
        let d = yhat - values[anchor + t];
        err += d * d;
    }
    err
}
