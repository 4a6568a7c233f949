//! Readers and writers for the on-disk formats: label files, calibration
//! files, split lists, and the line-oriented prediction interchange format.
//!
//! All emitters print floats with Rust's shortest-round-trip formatting, so
//! `parse(emit(x)) == x` holds bit-exactly for every valid record; parsers
//! fail loudly per line (never skipping silently) and preserve `DontCare`
//! rows for the evaluation stage rather than dropping them.

pub mod calib;
pub mod label;
pub mod predictions;
pub mod split;

pub use calib::{emit_calib_file, parse_calib_file, KittiCalib};
pub use label::{emit_label_file, parse_label_file, KittiLabel};
pub use predictions::{
    read_predictions, write_predictions, OrientationSpec, PredictionFile, PredictionRecord,
};
pub use split::{emit_split, parse_split};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KittiIoError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("required key {0:?} not found")]
    MissingKey(String),
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error("unsupported format header {got:?} (expected {expected:?})")]
    VersionMismatch { expected: String, got: String },
    #[error("line {line}: {got} orientation scalars for a {expected}-scalar bin head")]
    BinCountMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl KittiIoError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// A dataset frame number, printed zero-padded to six digits as in the
/// dataset's file names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId(pub u32);

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06}", self.0)
    }
}

impl FromStr for FrameId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("frame id must be decimal digits, got {s:?}"));
        }
        s.parse::<u32>()
            .map(FrameId)
            .map_err(|e| format!("frame id {s:?}: {e}"))
    }
}

/// Reads every `NNNNNN.txt` label file under `dir` into a frame-keyed map.
/// Files whose stem is not a frame id are rejected, not skipped.
pub fn read_label_dir(dir: &Path) -> Result<BTreeMap<FrameId, Vec<KittiLabel>>, KittiIoError> {
    let mut out = BTreeMap::new();
    for (frame, path) in frame_files(dir)? {
        let text = std::fs::read_to_string(&path).map_err(|e| KittiIoError::io(&path, e))?;
        out.insert(frame, parse_label_file(&text)?);
    }
    Ok(out)
}

/// Reads every `NNNNNN.txt` calibration file under `dir`.
pub fn read_calib_dir(dir: &Path) -> Result<BTreeMap<FrameId, KittiCalib>, KittiIoError> {
    let mut out = BTreeMap::new();
    for (frame, path) in frame_files(dir)? {
        let text = std::fs::read_to_string(&path).map_err(|e| KittiIoError::io(&path, e))?;
        out.insert(frame, parse_calib_file(&text)?);
    }
    Ok(out)
}

/// Enumerates `NNNNNN.txt` entries of a directory in ascending frame order.
pub fn frame_files(dir: &Path) -> Result<Vec<(FrameId, std::path::PathBuf)>, KittiIoError> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| KittiIoError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| KittiIoError::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let frame = stem.parse::<FrameId>().map_err(|reason| KittiIoError::Io {
            path: path.display().to_string(),
            message: reason,
        })?;
        out.push((frame, path));
    }
    out.sort_by_key(|(frame, _)| *frame);
    Ok(out)
}

/// Shortest-round-trip float formatting shared by all emitters.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
