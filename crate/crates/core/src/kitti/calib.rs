//! Calibration files: `KEY: v0 v1 ...` rows, one per projective quantity.
//! Only `P2` (the left color camera's 3x4 projection) feeds the pipeline,
//! but every row is preserved so files round-trip losslessly.

use crate::geometry::{CameraIntrinsics, GeometryError};
use crate::kitti::{fmt_f64, KittiIoError};

/// Parsed calibration file: all rows in file order plus the `P2` projection
/// unpacked row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiCalib {
    /// Every `KEY: values` row, in file order.
    pub entries: Vec<(String, Vec<f64>)>,
    /// `P2` reshaped to 3 rows of 4.
    pub p2: [[f64; 4]; 3],
}

impl KittiCalib {
    /// Builds a minimal calibration holding only a `P2` row.
    pub fn from_p2(p2: [[f64; 4]; 3]) -> Self {
        let flat: Vec<f64> = p2.iter().flatten().copied().collect();
        KittiCalib {
            entries: vec![("P2".to_string(), flat)],
            p2,
        }
    }

    /// Pinhole model of the `P2` projection, including its translation column.
    pub fn intrinsics(&self) -> Result<CameraIntrinsics, GeometryError> {
        CameraIntrinsics::from_projection_rows(self.p2)
    }
}

/// Parses a calibration file. `P2` must be present with exactly 12 values;
/// other keys keep whatever count they carry.
pub fn parse_calib_file(text: &str) -> Result<KittiCalib, KittiIoError> {
    let mut entries = Vec::new();
    let mut p2 = None;
    for raw in text.lines() {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let (key, rest) = raw.split_once(':').ok_or_else(|| {
            KittiIoError::MalformedMatrix(format!("row {raw:?} has no `KEY:` prefix"))
        })?;
        let key = key.trim().to_string();
        let values = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    KittiIoError::MalformedMatrix(format!("{key}: value {tok:?} is not a number"))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if key == "P2" {
            if values.len() != 12 {
                return Err(KittiIoError::MalformedMatrix(format!(
                    "P2 carries {} values, expected 12",
                    values.len()
                )));
            }
            let mut rows = [[0.0; 4]; 3];
            for (i, v) in values.iter().enumerate() {
                rows[i / 4][i % 4] = *v;
            }
            p2 = Some(rows);
        }
        entries.push((key, values));
    }
    let p2 = p2.ok_or_else(|| KittiIoError::MissingKey("P2".to_string()))?;
    Ok(KittiCalib { entries, p2 })
}

/// Emits rows in stored order with shortest-round-trip float formatting.
pub fn emit_calib_file(calib: &KittiCalib) -> String {
    let mut out = String::new();
    for (key, values) in &calib.entries {
        out.push_str(key);
        out.push(':');
        for v in values {
            out.push(' ');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}
