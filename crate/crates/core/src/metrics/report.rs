//! Precision/recall summarization over pooled detections and the top-level
//! evaluation driver.

use crate::kitti::{FrameId, KittiIoError, KittiLabel};
use crate::metrics::iou::iou3d;
use crate::metrics::matching::{
    match_frame, prepare_ground_truths, DetKind, DifficultyLevel, FrameMatch, GroundTruth,
    PooledDetection, Prediction,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Recall sample points: 40 evenly spaced targets, skipping zero.
const N_RECALL_POINTS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no evaluable ground truth: average precision is undefined")]
    NoGroundTruth,
    #[error("orientation score is undefined when average precision is zero")]
    UndefinedScore,
    #[error("prediction frame {0} has no ground-truth frame")]
    FrameMismatch(FrameId),
    #[error("prediction in frame {0} carries no score")]
    PredictionWithoutScore(FrameId),
    #[error("bad threshold for class {class:?}: {value}")]
    BadThreshold { class: String, value: f64 },
    #[error(transparent)]
    Io(#[from] KittiIoError),
}

/// Sorts pooled detections by descending score (ties keep input order, so
/// pooling order is part of the contract and must be deterministic).
fn score_order(dets: &[PooledDetection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap());
    order
}

/// Curve evaluation shared by AP and AOS. Walking the detections in score
/// order, the value at cutoff `k` is `(sum of per-detection credit) / k`;
/// with credit 1 per true positive that is precision, with credit
/// `(1 + cos(yaw error)) / 2` it is cumulative orientation similarity. The
/// result is the mean over the 40 recall targets of the right envelope
/// `max value among cutoffs with recall >= r`, as a percentage.
fn recall_envelope_mean(
    dets: &[PooledDetection],
    n_gt: usize,
    credit: impl Fn(&DetKind) -> f64,
) -> Result<f64, MetricsError> {
    if n_gt == 0 {
        return Err(MetricsError::NoGroundTruth);
    }
    let order = score_order(dets);
    let mut samples = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    let mut credit_sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if matches!(dets[i].kind, DetKind::Tp { .. }) {
            tp += 1;
        }
        credit_sum += credit(&dets[i].kind);
        let recall = tp as f64 / n_gt as f64;
        samples.push((recall, credit_sum / (rank + 1) as f64));
    }
    let mut total = 0.0;
    for i in 1..=N_RECALL_POINTS {
        let r = i as f64 / N_RECALL_POINTS as f64;
        let best = samples
            .iter()
            .filter(|(recall, _)| *recall >= r)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        total += best;
    }
    Ok(100.0 * total / N_RECALL_POINTS as f64)
}

/// Average precision (percent) over 40 recall points with right-envelope
/// interpolation.
pub fn ap_r40(dets: &[PooledDetection], n_gt: usize) -> Result<f64, MetricsError> {
    recall_envelope_mean(dets, n_gt, |kind| match kind {
        DetKind::Tp { .. } => 1.0,
        DetKind::Fp => 0.0,
    })
}

/// Average orientation similarity (percent): precision's per-detection
/// credit shrinks from 1 to the orientation similarity, so the value at
/// every cutoff — and therefore the whole score — is bounded by precision.
pub fn aos_r40(dets: &[PooledDetection], n_gt: usize) -> Result<f64, MetricsError> {
    recall_envelope_mean(dets, n_gt, |kind| match kind {
        DetKind::Tp {
            orientation_sim, ..
        } => *orientation_sim,
        DetKind::Fp => 0.0,
    })
}

/// Orientation score: AOS normalized by AP. Undefined when AP is zero.
pub fn os(aos: f64, ap: f64) -> Result<f64, MetricsError> {
    if ap == 0.0 {
        return Err(MetricsError::UndefinedScore);
    }
    Ok(aos / ap)
}

/// Evaluation knobs. Per-class 3D IoU thresholds must lie in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub iou_thresholds: BTreeMap<String, f64>,
    /// Treat vans as ignorable look-alikes during car evaluation (a matched
    /// van then costs nothing instead of counting as a false positive).
    pub van_as_car: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: [("Car", 0.7), ("Pedestrian", 0.5), ("Cyclist", 0.5)]
                .into_iter()
                .map(|(c, t)| (c.to_string(), t))
                .collect(),
            van_as_car: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        for (class, &t) in &self.iou_thresholds {
            if !(t > 0.0 && t <= 1.0) {
                return Err(MetricsError::BadThreshold {
                    class: class.clone(),
                    value: t,
                });
            }
        }
        Ok(())
    }
}

/// One class-by-difficulty cell of the report. Undefined quantities (no
/// evaluable ground truth, or zero AP for the orientation score) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub class: String,
    pub difficulty: DifficultyLevel,
    pub ap: Option<f64>,
    pub aos: Option<f64>,
    pub os: Option<f64>,
    /// Mean 3D IoU over true positives; `None` when there are none.
    pub mean_iou3d: Option<f64>,
    pub n_gt: usize,
    pub n_pred: usize,
}

/// Full evaluation output: one cell per class and difficulty tier.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cells: Vec<EvalCell>,
    pub config: EvalConfig,
}

impl EvalReport {
    /// Machine-readable form, one row per cell; undefined values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,difficulty,ap,aos,os,mean_iou3d\n");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.class,
                c.difficulty.name(),
                fmt(c.ap),
                fmt(c.aos),
                fmt(c.os),
                fmt(c.mean_iou3d),
            ));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# matching: 3D IoU, thresholds {:?}",
            self.config.iou_thresholds
        )?;
        writeln!(
            f,
            "{:<12} {:<10} {:>8} {:>8} {:>8} {:>10} {:>6} {:>6}",
            "class", "difficulty", "ap", "aos", "os", "mean_iou", "gt", "pred"
        )?;
        let cell = |v: Option<f64>| match v {
            Some(x) => format!("{x:.2}"),
            None => "-".to_string(),
        };
        for c in &self.cells {
            writeln!(
                f,
                "{:<12} {:<10} {:>8} {:>8} {:>8} {:>10} {:>6} {:>6}",
                c.class,
                c.difficulty.name(),
                cell(c.ap),
                cell(c.aos),
                cell(c.os.map(|x| x * 100.0)),
                cell(c.mean_iou3d),
                c.n_gt,
                c.n_pred,
            )?;
        }
        Ok(())
    }
}

/// Evaluates predictions against ground truth, both keyed by frame.
///
/// Ground-truth frames with no prediction entry contribute misses; a
/// prediction frame absent from the ground truth is an error. Predictions
/// shorter than a tier's height gate are left out of that tier's pool
/// (they could never match an admitted ground truth and should not be
/// punished as false positives for existing).
pub fn evaluate(
    gts: &BTreeMap<FrameId, Vec<KittiLabel>>,
    preds: &BTreeMap<FrameId, Vec<KittiLabel>>,
    config: &EvalConfig,
) -> Result<EvalReport, MetricsError> {
    config.validate()?;
    for frame in preds.keys() {
        if !gts.contains_key(frame) {
            return Err(MetricsError::FrameMismatch(*frame));
        }
    }
    for (frame, records) in preds {
        if records
            .iter()
            .any(|r| !r.is_dont_care() && r.score.is_none())
        {
            return Err(MetricsError::PredictionWithoutScore(*frame));
        }
    }

    let mut cells = Vec::new();
    for class in config.iou_thresholds.keys() {
        let threshold = config.iou_thresholds[class];
        let neighbors: &[&str] = if config.van_as_car && class == "Car" {
            &["Van"]
        } else {
            &[]
        };
        for level in DifficultyLevel::ALL {
            let mut pooled = Vec::new();
            let mut n_gt = 0usize;
            let mut n_pred = 0usize;
            for (frame, gt_labels) in gts {
                let gt_rows: Vec<GroundTruth> =
                    prepare_ground_truths(gt_labels, class, level, neighbors);
                let pred_rows: Vec<Prediction> = preds
                    .get(frame)
                    .map(|records| {
                        records
                            .iter()
                            .filter(|r| {
                                r.class_label == *class && r.bbox.height() >= level.min_height_px()
                            })
                            .filter_map(|r| {
                                Some(Prediction {
                                    box3d: r.box3d()?,
                                    bbox: r.bbox,
                                    score: r.score.unwrap_or(0.0),
                                })
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                n_pred += pred_rows.len();
                let FrameMatch {
                    detections,
                    n_evaluable_gt,
                } = match_frame(&pred_rows, &gt_rows, threshold);
                n_gt += n_evaluable_gt;
                pooled.extend(detections);
            }
            cells.push(summarize_cell(class, level, &pooled, n_gt, n_pred));
        }
    }
    Ok(EvalReport {
        cells,
        config: config.clone(),
    })
}

fn summarize_cell(
    class: &str,
    difficulty: DifficultyLevel,
    pooled: &[PooledDetection],
    n_gt: usize,
    n_pred: usize,
) -> EvalCell {
    let ap = ap_r40(pooled, n_gt).ok();
    let aos = aos_r40(pooled, n_gt).ok();
    let os_val = match (ap, aos) {
        (Some(ap), Some(aos)) => os(aos, ap).ok(),
        _ => None,
    };
    let tp_ious: Vec<f64> = pooled
        .iter()
        .filter_map(|d| match d.kind {
            DetKind::Tp { iou, .. } => Some(iou),
            DetKind::Fp => None,
        })
        .collect();
    let mean_iou3d = if tp_ious.is_empty() {
        None
    } else {
        Some(tp_ious.iter().sum::<f64>() / tp_ious.len() as f64)
    };
    EvalCell {
        class: class.to_string(),
        difficulty,
        ap,
        aos,
        os: os_val,
        mean_iou3d,
        n_gt,
        n_pred,
    }
}

/// Directory-walking wrapper over [`evaluate`]: reads `NNNNNN.txt` label
/// files from both trees.
pub fn evaluate_dirs(
    gt_dir: &Path,
    pred_dir: &Path,
    config: &EvalConfig,
) -> Result<EvalReport, MetricsError> {
    let gts = crate::kitti::read_label_dir(gt_dir)?;
    let preds = crate::kitti::read_label_dir(pred_dir)?;
    evaluate(&gts, &preds, config)
}

/// Convenience for tests and self-checks: mean 3D IoU of paired boxes.
pub fn mean_iou3d_of_pairs(pairs: &[(crate::geometry::Box3D, crate::geometry::Box3D)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(a, b)| iou3d(a, b)).sum::<f64>() / pairs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(score: f64, sim: f64) -> PooledDetection {
        PooledDetection {
            score,
            kind: DetKind::Tp {
                orientation_sim: sim,
                iou: 0.9,
            },
        }
    }

    fn fp(score: f64) -> PooledDetection {
        PooledDetection {
            score,
            kind: DetKind::Fp,
        }
    }

    #[test]
    fn perfect_detections_score_one_hundred() {
        let dets: Vec<PooledDetection> = (0..5).map(|i| tp(0.9 - 0.1 * i as f64, 1.0)).collect();
        assert_eq!(ap_r40(&dets, 5).unwrap(), 100.0);
        assert_eq!(aos_r40(&dets, 5).unwrap(), 100.0);
        assert_eq!(os(100.0, 100.0).unwrap(), 1.0);
    }

    #[test]
    fn no_detections_is_zero_ap_when_ground_truth_exists() {
        assert_eq!(ap_r40(&[], 3).unwrap(), 0.0);
        assert_eq!(aos_r40(&[], 3).unwrap(), 0.0);
    }

    #[test]
    fn no_ground_truth_is_undefined_not_zero() {
        assert_eq!(ap_r40(&[fp(0.5)], 0), Err(MetricsError::NoGroundTruth));
        assert_eq!(os(0.0, 0.0), Err(MetricsError::UndefinedScore));
    }

    #[test]
    fn hand_computed_envelope_with_one_false_positive() {
        // Detections in score order: TP, TP, FP, TP against 4 ground truths.
        // Precision samples: (1/4, 1), (1/2, 1), (1/2, 2/3), (3/4, 3/4).
        // Envelope: 1 up to recall 1/2, then 3/4 up to 3/4, then 0.
        let dets = vec![tp(0.9, 1.0), tp(0.8, 0.5), fp(0.7), tp(0.6, 0.0)];
        let ap = ap_r40(&dets, 4).unwrap();
        assert_eq!(ap, 100.0 * (20.0 * 1.0 + 10.0 * 0.75) / 40.0);
        assert_eq!(ap, 68.75);
        // AOS samples: (1/4, 1), (1/2, 3/4), (1/2, 1/2), (3/4, 3/8).
        let aos = aos_r40(&dets, 4).unwrap();
        assert_eq!(
            aos,
            100.0 * (10.0 * 1.0 + 10.0 * 0.75 + 10.0 * 0.375) / 40.0
        );
        assert_eq!(aos, 53.125);
        let ratio = os(aos, ap).unwrap();
        assert_eq!(ratio, 53.125 / 68.75);
        assert!((ratio - 17.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn pooling_order_breaks_score_ties_deterministically() {
        let dets = vec![fp(0.5), tp(0.5, 1.0)];
        let flipped = vec![tp(0.5, 1.0), fp(0.5)];
        // Same multiset, different pooling order: the stable sort keeps
        // input order among ties, so the curves legitimately differ.
        let a = ap_r40(&dets, 1).unwrap();
        let b = ap_r40(&flipped, 1).unwrap();
        assert_eq!(a, 50.0);
        assert_eq!(b, 100.0);
    }

    #[test]
    fn aos_never_exceeds_ap() {
        // Orientation similarity is bounded by 1, so each cutoff's value is
        // bounded by precision; spot-check a few shapes.
        let cases = vec![
            vec![tp(0.9, 0.2), fp(0.8), tp(0.7, 0.9)],
            vec![fp(0.9), tp(0.5, 0.0)],
            vec![tp(1.0, 1.0)],
        ];
        for dets in cases {
            let ap = ap_r40(&dets, 2).unwrap();
            let aos = aos_r40(&dets, 2).unwrap();
            assert!(aos <= ap + 1e-12, "{aos} > {ap}");
        }
    }

    #[test]
    fn csv_has_empty_fields_for_undefined_cells() {
        let report = EvalReport {
            cells: vec![EvalCell {
                class: "Cyclist".into(),
                difficulty: DifficultyLevel::Easy,
                ap: None,
                aos: None,
                os: None,
                mean_iou3d: None,
                n_gt: 0,
                n_pred: 0,
            }],
            config: EvalConfig::default(),
        };
        assert_eq!(
            report.to_csv(),
            "class,difficulty,ap,aos,os,mean_iou3d\nCyclist,Easy,,,,\n"
        );
    }

    #[test]
    fn threshold_validation_rejects_nonsense() {
        let mut cfg = EvalConfig::default();
        cfg.iou_thresholds.insert("Car".into(), 0.0);
        assert!(matches!(
            cfg.validate(),
            Err(MetricsError::BadThreshold { .. })
        ));
        cfg.iou_thresholds.insert("Car".into(), 1.5);
        assert!(cfg.validate().is_err());
        cfg.iou_thresholds.insert("Car".into(), 1.0);
        assert!(cfg.validate().is_ok());
    }
}
