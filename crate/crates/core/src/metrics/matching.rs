//! Difficulty gating and greedy prediction-to-ground-truth assignment for
//! one frame and one class.

use crate::geometry::{Box3D, Rect};
use crate::kitti::KittiLabel;
use crate::metrics::iou::iou3d;

/// Evaluation difficulty tiers. Each tier admits ground truths by minimum
/// box height in pixels, maximum truncation, and maximum occlusion state
/// (all bounds inclusive); objects outside the tier are ignored rather than
/// counted as misses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DifficultyLevel {
    Easy,
    Moderate,
    Hard,
}

impl DifficultyLevel {
    pub const ALL: [DifficultyLevel; 3] = [
        DifficultyLevel::Easy,
        DifficultyLevel::Moderate,
        DifficultyLevel::Hard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DifficultyLevel::Easy => "Easy",
            DifficultyLevel::Moderate => "Moderate",
            DifficultyLevel::Hard => "Hard",
        }
    }

    /// Minimum image-plane box height in pixels.
    pub fn min_height_px(self) -> f64 {
        match self {
            DifficultyLevel::Easy => 40.0,
            DifficultyLevel::Moderate | DifficultyLevel::Hard => 25.0,
        }
    }

    /// Maximum truncation fraction.
    pub fn max_truncation(self) -> f64 {
        match self {
            DifficultyLevel::Easy => 0.15,
            DifficultyLevel::Moderate => 0.30,
            DifficultyLevel::Hard => 0.50,
        }
    }

    /// Maximum occlusion state.
    pub fn max_occlusion(self) -> i8 {
        match self {
            DifficultyLevel::Easy => 0,
            DifficultyLevel::Moderate => 1,
            DifficultyLevel::Hard => 2,
        }
    }

    /// Whether a ground-truth row is evaluable at this tier. Unknown
    /// occlusion (state 3, or the -1 placeholder) is treated as the hardest
    /// case and never passes.
    pub fn admits(self, label: &KittiLabel) -> bool {
        let occluded = if label.occluded < 0 {
            3
        } else {
            label.occluded
        };
        label.bbox.height() >= self.min_height_px()
            && label.truncated <= self.max_truncation()
            && occluded <= self.max_occlusion()
    }
}

/// How a ground-truth row participates in matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtKind {
    /// Counts toward recall; a match is a true positive.
    Evaluable,
    /// Real object outside the difficulty tier: matching it costs nothing.
    IgnoredDifficulty,
    /// 2D exclusion region with no 3D box.
    DontCare,
}

/// One ground-truth row prepared for matching.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Absent exactly for `DontCare` regions.
    pub box3d: Option<Box3D>,
    pub bbox: Rect,
    pub kind: GtKind,
}

/// One prediction prepared for matching.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub box3d: Box3D,
    pub bbox: Rect,
    pub score: f64,
}

/// Splits one frame's ground-truth rows for a class at a difficulty tier.
/// Rows of other classes are absent entirely (they play no role for this
/// class); `extra_ignored_classes` lists look-alike classes whose boxes are
/// ignored instead of punished (e.g. vans during car evaluation).
pub fn prepare_ground_truths(
    labels: &[KittiLabel],
    class: &str,
    level: DifficultyLevel,
    extra_ignored_classes: &[&str],
) -> Vec<GroundTruth> {
    let mut out = Vec::new();
    for l in labels {
        if l.is_dont_care() {
            out.push(GroundTruth {
                box3d: None,
                bbox: l.bbox,
                kind: GtKind::DontCare,
            });
            continue;
        }
        let same = l.class_label == class;
        let neighbor = extra_ignored_classes.contains(&l.class_label.as_str());
        if !same && !neighbor {
            continue;
        }
        let Some(box3d) = l.box3d() else { continue };
        let kind = if same && level.admits(l) {
            GtKind::Evaluable
        } else {
            GtKind::IgnoredDifficulty
        };
        out.push(GroundTruth {
            box3d: Some(box3d),
            bbox: l.bbox,
            kind,
        });
    }
    out
}

/// Outcome of one pooled prediction after matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetKind {
    /// Matched an evaluable ground truth.
    Tp {
        /// Orientation similarity `(1 + cos(yaw error)) / 2`, in `[0, 1]`.
        orientation_sim: f64,
        iou: f64,
    },
    Fp,
}

/// A prediction's score and outcome, ready for cross-frame pooling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledDetection {
    pub score: f64,
    pub kind: DetKind,
}

/// Matching results for one frame.
#[derive(Debug, Clone, Default)]
pub struct FrameMatch {
    /// Counted predictions (true and false positives). Predictions absorbed
    /// by ignored ground truths or `DontCare` regions appear nowhere.
    pub detections: Vec<PooledDetection>,
    /// Number of evaluable ground truths (the recall denominator).
    pub n_evaluable_gt: usize,
}

/// Fraction of the prediction's image box covered by a `DontCare` region;
/// these regions have no 3D extent, so the overlap test lives in the image
/// plane.
fn dont_care_coverage(pred: &Rect, region: &Rect) -> f64 {
    let w = (pred.x_max.min(region.x_max) - pred.x_min.max(region.x_min)).max(0.0);
    let h = (pred.y_max.min(region.y_max) - pred.y_min.max(region.y_min)).max(0.0);
    let area = pred.width() * pred.height();
    if area <= 0.0 {
        return 0.0;
    }
    w * h / area
}

const DONT_CARE_COVERAGE_MIN: f64 = 0.5;

/// Greedy assignment for one frame: predictions in descending score order
/// each take the highest-overlap unmatched evaluable ground truth with 3D
/// IoU at or above `iou_threshold`. A prediction that matches nothing
/// evaluable but overlaps an ignored ground truth (same threshold) or sits
/// mostly inside a `DontCare` region is dropped from both counts; ignored
/// ground truths are not consumed, so several low-value predictions can
/// vanish into the same region. Score ties keep input order.
pub fn match_frame(preds: &[Prediction], gts: &[GroundTruth], iou_threshold: f64) -> FrameMatch {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.partial_cmp(&preds[a].score).unwrap());

    let mut gt_taken = vec![false; gts.len()];
    let mut detections = Vec::with_capacity(preds.len());
    for &pi in &order {
        let p = &preds[pi];
        // Best still-free evaluable ground truth above the threshold wins.
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt.kind != GtKind::Evaluable || gt_taken[gi] {
                continue;
            }
            let overlap = iou3d(&p.box3d, gt.box3d.as_ref().unwrap());
            if overlap >= iou_threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((gi, overlap));
            }
        }
        if let Some((gi, overlap)) = best {
            gt_taken[gi] = true;
            let gt_yaw = gts[gi].box3d.as_ref().unwrap().pose.orientation.theta;
            let delta = crate::angle::wrap_angle(p.box3d.pose.orientation.theta - gt_yaw);
            detections.push(PooledDetection {
                score: p.score,
                kind: DetKind::Tp {
                    orientation_sim: (1.0 + delta.cos()) / 2.0,
                    iou: overlap,
                },
            });
            continue;
        }
        // No evaluable match: absorbed by ignored boxes or DontCare regions?
        let absorbed = gts.iter().any(|gt| match gt.kind {
            GtKind::Evaluable => false,
            GtKind::IgnoredDifficulty => {
                iou3d(&p.box3d, gt.box3d.as_ref().unwrap()) >= iou_threshold
            }
            GtKind::DontCare => dont_care_coverage(&p.bbox, &gt.bbox) >= DONT_CARE_COVERAGE_MIN,
        });
        if !absorbed {
            detections.push(PooledDetection {
                score: p.score,
                kind: DetKind::Fp,
            });
        }
    }
    FrameMatch {
        detections,
        n_evaluable_gt: gts.iter().filter(|g| g.kind == GtKind::Evaluable).count(),
    }
}
