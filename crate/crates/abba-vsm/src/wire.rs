//! The `.abbaseg` segment-stream file: the boundary between the compressor
//! side (reduction) and the classifier side (symbolization and the vector
//! space model).
//!
//! Format, JSON lines with `format_version` 1:
//!
//! ```text
//! {"format_version":1,"dataset_name":"Coffee","rt":0.1,"sample_count":2}
//! {"sample_id":0,"label":"1","y0":0.0,"original_length":4,"segments":[[3,3.0]]}
//! {"sample_id":1,"label":"2","y0":5.0,"original_length":3,"segments":[[1,-1.0],[1,-1.0]]}
//! ```
//!
//! Floats are written as the shortest decimal strings that round-trip, so a
//! write/read cycle reproduces every value bit for bit. Byte accounting is
//! reported both for the actual file and for an idealized binary payload of
//! 8 bytes per segment (4-byte length + 4-byte increment) against 4 bytes
//! per raw float value; the text encoding itself is not the measured link.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reducer::SegmentSequence;

pub const FORMAT_VERSION: u32 = 1;

/// First line of a segment-stream file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub format_version: u32,
    pub dataset_name: String,
    pub rt: f64,
    pub sample_count: usize,
}

/// Header fields supplied by the writer.
#[derive(Debug, Clone)]
pub struct WireMeta {
    pub dataset_name: String,
    pub rt: f64,
}

/// Idealized byte accounting for a batch of segment sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadStats {
    /// 4 bytes per raw float value, summed over samples.
    pub raw_equivalent_bytes: u64,
    /// 8 bytes per segment (4-byte length + 4-byte increment).
    pub segment_payload_bytes: u64,
    /// `100 * (1 - segment_payload/raw_equivalent)`.
    pub reduction_percent: f64,
}

/// Returns the idealized payload sizes for a batch.
pub fn payload_stats(seqs: &[SegmentSequence]) -> PayloadStats {
    let raw: u64 = seqs.iter().map(|s| 4 * s.original_length as u64).sum();
    let payload: u64 = seqs.iter().map(|s| 8 * s.segments.len() as u64).sum();
    let reduction = if raw > 0 {
        100.0 * (1.0 - payload as f64 / raw as f64)
    } else {
        0.0
    };
    PayloadStats {
        raw_equivalent_bytes: raw,
        segment_payload_bytes: payload,
        reduction_percent: reduction,
    }
}

/// Byte accounting for one written stream file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireStats {
    pub bytes_written: u64,
    #[serde(flatten)]
    pub payload: PayloadStats,
}

/// Writes a segment stream. The batch must be non-empty and every sequence
/// must satisfy its structural invariants.
pub fn write_segments(
    seqs: &[SegmentSequence],
    meta: &WireMeta,
    path: impl AsRef<Path>,
) -> Result<WireStats> {
    let path = path.as_ref();
    if seqs.is_empty() {
        return Err(Error::Format(
            "a segment stream must carry at least one sample".into(),
        ));
    }
    for seq in seqs {
        seq.validate()?;
    }

    let header = StreamHeader {
        format_version: FORMAT_VERSION,
        dataset_name: meta.dataset_name.clone(),
        rt: meta.rt,
        sample_count: seqs.len(),
    };

    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut bytes: u64 = 0;
    let mut write_line = |line: &str, out: &mut BufWriter<std::fs::File>| -> Result<()> {
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        bytes += line.len() as u64 + 1;
        Ok(())
    };

    let header_line = serde_json::to_string(&header)
        .map_err(|e| Error::Format(format!("header encoding failed: {e}")))?;
    write_line(&header_line, &mut out)?;
    for seq in seqs {
        let line = serde_json::to_string(seq)
            .map_err(|e| Error::Format(format!("record encoding failed: {e}")))?;
        write_line(&line, &mut out)?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    Ok(WireStats {
        bytes_written: bytes,
        payload: payload_stats(seqs),
    })
}

/// Reads a segment stream back. Inverse of [`write_segments`].
pub fn read_segments(path: impl AsRef<Path>) -> Result<(Vec<SegmentSequence>, StreamHeader)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();

    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty stream file", path.display())))?;
    let header: StreamHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Format(format!("{}: bad header: {e}", path.display())))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported format_version {} (expected {FORMAT_VERSION})",
            path.display(),
            header.format_version
        )));
    }

    let mut seqs = Vec::with_capacity(header.sample_count);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seq: SegmentSequence = serde_json::from_str(line).map_err(|e| {
            Error::Format(format!(
                "{}: bad record on line {}: {e}",
                path.display(),
                i + 2
            ))
        })?;
        seq.validate()?;
        seqs.push(seq);
    }
    if seqs.len() != header.sample_count {
        return Err(Error::Format(format!(
            "{}: header claims {} samples but file holds {} (truncated?)",
            path.display(),
            header.sample_count,
            seqs.len()
        )));
    }
    Ok((seqs, header))
}
