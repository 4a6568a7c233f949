//! Label-file records: one whitespace-separated object per line, 15 fields
//! for ground truth and 16 (with a trailing score) for detection output.

use crate::geometry::{Box3D, BoxDims, CameraIntrinsics, Pose, Rect};
use crate::kitti::{fmt_f64, KittiIoError};

use std::f64::consts::PI;

/// Slack on the `[-pi, pi]` angle fields so values that were printed at full
/// precision and re-parsed never fail validation.
const ANGLE_SLACK: f64 = 1e-9;

/// One object row of a label file.
///
/// `location` is the bottom-face center of the box in camera coordinates
/// (the raw file convention), *not* the volumetric center; use [`Self::box3d`]
/// to convert. `DontCare` rows keep their placeholder values (`-1` dims,
/// `-10` angles) verbatim so files round-trip unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiLabel {
    pub class_label: String,
    /// Fraction of the object outside the image, in `[0, 1]`.
    pub truncated: f64,
    /// Occlusion state 0..=3 (3 = unknown); `-1` on `DontCare` rows.
    pub occluded: i8,
    /// Viewpoint angle as seen from the object's viewing ray, `[-pi, pi]`.
    pub alpha: f64,
    /// Image-plane box, pixels.
    pub bbox: Rect,
    /// Height, width, length in meters.
    pub dims_hwl: [f64; 3],
    /// Bottom-face center in camera coordinates, meters.
    pub location: [f64; 3],
    /// Yaw about the camera's down axis, `[-pi, pi]`.
    pub rotation_y: f64,
    /// Detection confidence; absent on ground-truth rows.
    pub score: Option<f64>,
}

impl KittiLabel {
    /// Whether this row marks a region to exclude from evaluation.
    pub fn is_dont_care(&self) -> bool {
        self.class_label == "DontCare"
    }

    /// Volumetric box for a non-`DontCare` row: lifts the bottom-face-center
    /// location to the volume center and maps (h, w, l) onto the box axes.
    pub fn box3d(&self) -> Option<Box3D> {
        if self.is_dont_care() {
            return None;
        }
        let [h, w, l] = self.dims_hwl;
        let dims = BoxDims::from_hwl(h, w, l).ok()?;
        let center = [
            self.location[0],
            self.location[1] - h / 2.0,
            self.location[2],
        ];
        Some(Box3D {
            pose: Pose::from_yaw_t(self.rotation_y, center),
            dims,
        })
    }

    /// Builds a detection row from a solved box: location drops back to the
    /// bottom-face center and `alpha` is re-derived from the box center ray.
    pub fn from_box3d(
        class_label: &str,
        box3d: &Box3D,
        bbox: Rect,
        k: &CameraIntrinsics,
        score: f64,
    ) -> Self {
        let t = box3d.pose.translation();
        let theta = box3d.pose.orientation.theta;
        let ray = crate::geometry::ray_angle(k, bbox.center_u());
        KittiLabel {
            class_label: class_label.to_string(),
            truncated: 0.0,
            occluded: 0,
            alpha: crate::angle::wrap_angle(theta - ray),
            bbox,
            dims_hwl: {
                let (h, w, l) = box3d.dims.to_hwl();
                [h, w, l]
            },
            location: [t[0], t[1] + box3d.dims.dy / 2.0, t[2]],
            rotation_y: theta,
            score: Some(score),
        }
    }

    fn validate(&self, line: usize) -> Result<(), KittiIoError> {
        let fail = |reason: String| KittiIoError::MalformedLine { line, reason };
        let all = [
            self.truncated,
            self.alpha,
            self.rotation_y,
            self.bbox.x_min,
            self.bbox.y_min,
            self.bbox.x_max,
            self.bbox.y_max,
        ];
        if all
            .iter()
            .chain(&self.dims_hwl)
            .chain(&self.location)
            .chain(self.score.iter())
            .any(|v| !v.is_finite())
        {
            return Err(fail("non-finite field".into()));
        }
        if self.bbox.x_min >= self.bbox.x_max || self.bbox.y_min >= self.bbox.y_max {
            return Err(fail(format!(
                "degenerate bbox [{}, {}, {}, {}]",
                self.bbox.x_min, self.bbox.y_min, self.bbox.x_max, self.bbox.y_max
            )));
        }
        if self.is_dont_care() {
            // Placeholder fields (-1 dims, -10 angles) are the convention for
            // these rows; only the image region needs to be sane.
            return Ok(());
        }
        if !(0.0..=1.0).contains(&self.truncated) {
            return Err(fail(format!(
                "truncation {} outside [0, 1]",
                self.truncated
            )));
        }
        if !(0..=3).contains(&self.occluded) {
            return Err(fail(format!(
                "occlusion state {} outside 0..=3",
                self.occluded
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("rotation_y", self.rotation_y)] {
            if v.abs() > PI + ANGLE_SLACK {
                return Err(fail(format!("{name} {v} outside [-pi, pi]")));
            }
        }
        if self.dims_hwl.iter().any(|&d| d <= 0.0) {
            return Err(fail(format!("non-positive dimensions {:?}", self.dims_hwl)));
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(fail(format!("score {s} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Parses a whole label file. Any malformed line fails the file; blank lines
/// are permitted (trailing newlines are universal in shipped label files).
pub fn parse_label_file(text: &str) -> Result<Vec<KittiLabel>, KittiIoError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        out.push(parse_label_line(raw, line)?);
    }
    Ok(out)
}

fn parse_label_line(raw: &str, line: usize) -> Result<KittiLabel, KittiIoError> {
    let fail = |reason: String| KittiIoError::MalformedLine { line, reason };
    let fields: Vec<&str> = raw.split_whitespace().collect();
    if fields.len() != 15 && fields.len() != 16 {
        return Err(fail(format!(
            "expected 15 or 16 fields, got {}",
            fields.len()
        )));
    }
    let num = |i: usize, name: &str| -> Result<f64, KittiIoError> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| fail(format!("{name} field {:?} is not a number", fields[i])))
    };
    let occluded_raw = num(2, "occluded")?;
    if occluded_raw.fract() != 0.0 || !(-1.0..=3.0).contains(&occluded_raw) {
        return Err(fail(format!(
            "occluded field {:?} is not an integer in -1..=3",
            fields[2]
        )));
    }
    let label = KittiLabel {
        class_label: fields[0].to_string(),
        truncated: num(1, "truncated")?,
        occluded: occluded_raw as i8,
        alpha: num(3, "alpha")?,
        bbox: Rect {
            x_min: num(4, "bbox.x_min")?,
            y_min: num(5, "bbox.y_min")?,
            x_max: num(6, "bbox.x_max")?,
            y_max: num(7, "bbox.y_max")?,
        },
        dims_hwl: [num(8, "height")?, num(9, "width")?, num(10, "length")?],
        location: [num(11, "x")?, num(12, "y")?, num(13, "z")?],
        rotation_y: num(14, "rotation_y")?,
        score: if fields.len() == 16 {
            Some(num(15, "score")?)
        } else {
            None
        },
    };
    label.validate(line)?;
    Ok(label)
}

/// Emits records in file order, one per line, with shortest-round-trip float
/// formatting so a re-parse reproduces every value bit-exactly.
pub fn emit_label_file(records: &[KittiLabel]) -> String {
    let mut out = String::new();
    for r in records {
        let mut fields = vec![
            r.class_label.clone(),
            fmt_f64(r.truncated),
            r.occluded.to_string(),
        ];
        fields.extend(
            [
                r.alpha,
                r.bbox.x_min,
                r.bbox.y_min,
                r.bbox.x_max,
                r.bbox.y_max,
                r.dims_hwl[0],
                r.dims_hwl[1],
                r.dims_hwl[2],
                r.location[0],
                r.location[1],
                r.location[2],
                r.rotation_y,
            ]
            .map(fmt_f64),
        );
        if let Some(s) = r.score {
            fields.push(fmt_f64(s));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
