//! Line-oriented interchange format for per-detection orientation heads.
//!
//! The first non-blank line is a header naming the format version and the bin
//! count, e.g. `oricon3d/v1 n=4`. Each following line is one detection:
//!
//! ```text
//! <frame> <class> <score> <x_min> <y_min> <x_max> <y_max> mb <3n scalars> [dims <h> <w> <l>]
//! <frame> <class> <score> <x_min> <y_min> <x_max> <y_max> theta <theta_l> [dims <h> <w> <l>]
//! ```
//!
//! `mb` rows carry a full bin head as `(score, cos, sin)` triples in bin
//! order; `theta` rows carry an already-decoded local angle. Exactly one of
//! the two is present per record, and an `mb` row whose scalar count
//! disagrees with the header's `n` fails the file.

use crate::kitti::{fmt_f64, FrameId, KittiIoError};
use crate::lifting::Detection2D;
use crate::multibin::MultiBinOutput;

use std::f64::consts::PI;

/// Format identifier carried by the header line.
pub const FORMAT_VERSION: &str = "oricon3d/v1";

/// Orientation payload of one record: a raw bin head or a decoded local angle.
#[derive(Debug, Clone, PartialEq)]
pub enum OrientationSpec {
    MultiBin(MultiBinOutput),
    Local(f64),
}

/// One detection row.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub frame: FrameId,
    pub det: Detection2D,
    pub orientation: OrientationSpec,
    /// Optional explicit (h, w, l) in meters; absent rows fall back to class
    /// priors downstream.
    pub dims_hwl: Option<[f64; 3]>,
}

/// A parsed prediction file: the header's bin count plus all records.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub n_bins: usize,
    pub records: Vec<PredictionRecord>,
}

/// Parses a prediction file, validating the header and every record.
pub fn read_predictions(text: &str) -> Result<PredictionFile, KittiIoError> {
    let mut lines = text.lines().enumerate();
    let (header_idx, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| KittiIoError::MalformedLine {
            line: 1,
            reason: "empty file (missing header)".into(),
        })?;
    let n_bins = parse_header(header, header_idx + 1)?;
    let mut records = Vec::new();
    for (idx, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        records.push(parse_record(raw, idx + 1, n_bins)?);
    }
    Ok(PredictionFile { n_bins, records })
}

fn parse_header(raw: &str, line: usize) -> Result<usize, KittiIoError> {
    let mut toks = raw.split_whitespace();
    let version = toks.next().unwrap_or_default();
    if version != FORMAT_VERSION {
        return Err(KittiIoError::VersionMismatch {
            expected: FORMAT_VERSION.to_string(),
            got: version.to_string(),
        });
    }
    let n_field = toks.next().ok_or_else(|| KittiIoError::MalformedLine {
        line,
        reason: "header is missing the `n=<bins>` field".into(),
    })?;
    let n = n_field
        .strip_prefix("n=")
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 2)
        .ok_or_else(|| KittiIoError::MalformedLine {
            line,
            reason: format!("header field {n_field:?} is not `n=<bins>` with bins >= 2"),
        })?;
    if let Some(extra) = toks.next() {
        return Err(KittiIoError::MalformedLine {
            line,
            reason: format!("unexpected trailing header token {extra:?}"),
        });
    }
    Ok(n)
}

fn parse_record(raw: &str, line: usize, n_bins: usize) -> Result<PredictionRecord, KittiIoError> {
    let fail = |reason: String| KittiIoError::MalformedLine { line, reason };
    let toks: Vec<&str> = raw.split_whitespace().collect();
    if toks.len() < 9 {
        return Err(fail(format!(
            "expected at least 9 fields, got {}",
            toks.len()
        )));
    }
    let frame = toks[0].parse::<FrameId>().map_err(&fail)?;
    let num = |i: usize| -> Result<f64, KittiIoError> {
        toks[i]
            .parse::<f64>()
            .map_err(|_| fail(format!("field {:?} is not a number", toks[i])))
    };
    let det = Detection2D::new(num(3)?, num(4)?, num(5)?, num(6)?, toks[1], num(2)?)
        .map_err(|e| fail(e.to_string()))?;

    // Orientation payload: scalars run from after the tag to the `dims`
    // marker (or end of line).
    let tag = toks[7];
    let dims_at = toks.iter().position(|t| *t == "dims");
    let payload_end = dims_at.unwrap_or(toks.len());
    let payload = &toks[8..payload_end];
    let orientation = match tag {
        "mb" => {
            if payload.len() != 3 * n_bins {
                return Err(KittiIoError::BinCountMismatch {
                    line,
                    expected: 3 * n_bins,
                    got: payload.len(),
                });
            }
            let scalars = payload
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| fail(format!("orientation scalar {t:?} is not a number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let head = MultiBinOutput::from_scalars(&scalars).map_err(|e| fail(e.to_string()))?;
            OrientationSpec::MultiBin(head)
        }
        "theta" => {
            if payload.len() != 1 {
                return Err(fail(format!(
                    "`theta` carries one scalar, got {}",
                    payload.len()
                )));
            }
            let theta = payload[0]
                .parse::<f64>()
                .map_err(|_| fail(format!("local angle {:?} is not a number", payload[0])))?;
            if !theta.is_finite() || theta.abs() > PI + 1e-9 {
                return Err(fail(format!("local angle {theta} outside [-pi, pi]")));
            }
            OrientationSpec::Local(theta)
        }
        other => {
            return Err(fail(format!(
                "unknown orientation tag {other:?} (expected `mb` or `theta`)"
            )))
        }
    };

    let dims_hwl = match dims_at {
        None => None,
        Some(at) => {
            let rest = &toks[at + 1..];
            if rest.len() != 3 {
                return Err(fail(format!("`dims` carries 3 values, got {}", rest.len())));
            }
            let mut hwl = [0.0; 3];
            for (slot, t) in hwl.iter_mut().zip(rest) {
                *slot = t
                    .parse::<f64>()
                    .map_err(|_| fail(format!("dimension {t:?} is not a number")))?;
                if !slot.is_finite() || *slot <= 0.0 {
                    return Err(fail(format!("non-positive dimension {slot}")));
                }
            }
            Some(hwl)
        }
    };

    Ok(PredictionRecord {
        frame,
        det,
        orientation,
        dims_hwl,
    })
}

/// Emits the header plus one line per record; shortest-round-trip floats make
/// `read_predictions(write_predictions(f)) == f` hold bit-exactly.
pub fn write_predictions(file: &PredictionFile) -> String {
    let mut out = format!("{FORMAT_VERSION} n={}\n", file.n_bins);
    for r in &file.records {
        let rect = r.det.rect();
        let mut fields = vec![
            r.frame.to_string(),
            r.det.class_label.clone(),
            fmt_f64(r.det.score),
            fmt_f64(rect.x_min),
            fmt_f64(rect.y_min),
            fmt_f64(rect.x_max),
            fmt_f64(rect.y_max),
        ];
        match &r.orientation {
            OrientationSpec::MultiBin(head) => {
                fields.push("mb".to_string());
                fields.extend(head.to_scalars().iter().map(|v| fmt_f64(*v)));
            }
            OrientationSpec::Local(theta) => {
                fields.push("theta".to_string());
                fields.push(fmt_f64(*theta));
            }
        }
        if let Some(hwl) = r.dims_hwl {
            fields.push("dims".to_string());
            fields.extend(hwl.iter().map(|v| fmt_f64(*v)));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
