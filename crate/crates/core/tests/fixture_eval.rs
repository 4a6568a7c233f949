//! End-to-end checks against the committed fixtures: the five-frame toy
//! evaluation scenario with hand-computed goldens, and the dataset-style
//! calibration/label pair used to pin the viewpoint-angle convention.

use monolift::geometry::ray_angle;
use monolift::kitti::{parse_calib_file, parse_label_file, read_label_dir};
use monolift::metrics::{evaluate, EvalConfig, EvalReport};
use monolift::wrap_angle;

use std::path::{Path, PathBuf};

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(path)
}

fn toy_report() -> EvalReport {
    let gts = read_label_dir(&fixture("toy_eval/label_2")).unwrap();
    let preds = read_label_dir(&fixture("toy_eval/pred")).unwrap();
    assert_eq!(gts.len(), 5);
    evaluate(&gts, &preds, &EvalConfig::default()).unwrap()
}

/// The toy scenario, worked by hand: four evaluable pedestrians, and in
/// score order a perfect hit (sim 1), a 0.2 m offset at 90 degrees yaw
/// error (IoU 9/11, sim 1/2), a 1.0 m offset miss (IoU 1/3, false
/// positive), one prediction inside the DontCare region (absorbed), and a
/// 0.4 m offset at 180 degrees (IoU 2/3, sim 0).
///
/// Precision samples (1/4, 1), (1/2, 1), (1/2, 2/3), (3/4, 3/4) give
/// AP = (20 + 10 * 3/4) / 40 = 68.75%. Similarity samples 1, 3/4, 1/2, 3/8
/// give AOS = (10 + 10 * 3/4 + 10 * 3/8) / 40 = 53.125%. Every quantity is
/// a dyadic rational, so the comparisons are exact.
#[test]
fn toy_fixture_reproduces_hand_computed_goldens() {
    let report = toy_report();
    let ped: Vec<_> = report
        .cells
        .iter()
        .filter(|c| c.class == "Pedestrian")
        .collect();
    assert_eq!(ped.len(), 3);
    for cell in &ped {
        // truncation 0, occlusion 0, 100 px boxes: every tier sees the
        // same four ground truths, so the three rows agree
        assert_eq!(cell.n_gt, 4, "{:?}", cell.difficulty);
        assert_eq!(cell.ap, Some(68.75));
        assert_eq!(cell.aos, Some(53.125));
        assert_eq!(cell.os, Some(53.125 / 68.75));
        let mean_iou = cell.mean_iou3d.unwrap();
        assert!(
            (mean_iou - 82.0 / 99.0).abs() < 1e-12,
            "mean IoU {mean_iou} vs 82/99"
        );
    }
}

#[test]
fn toy_fixture_has_no_ground_truth_for_other_classes() {
    let report = toy_report();
    for cell in report
        .cells
        .iter()
        .filter(|c| c.class == "Car" || c.class == "Cyclist")
    {
        assert_eq!(cell.n_gt, 0);
        assert_eq!(cell.ap, None);
        assert_eq!(cell.os, None);
    }
}

/// Feeding the ground truth back as its own prediction must saturate every
/// populated cell: AP 100, AOS 100, OS exactly 1.
#[test]
fn self_evaluation_saturates_all_scores() {
    let gts = read_label_dir(&fixture("toy_eval/label_2")).unwrap();
    let mut preds = gts.clone();
    for records in preds.values_mut() {
        for r in records.iter_mut() {
            if !r.is_dont_care() {
                r.score = Some(0.9);
            }
        }
    }
    let report = evaluate(&gts, &preds, &EvalConfig::default()).unwrap();
    let populated: Vec<_> = report.cells.iter().filter(|c| c.n_gt > 0).collect();
    assert!(!populated.is_empty());
    for cell in populated {
        assert_eq!(cell.ap, Some(100.0), "{} {:?}", cell.class, cell.difficulty);
        assert_eq!(cell.aos, Some(100.0));
        assert_eq!(cell.os, Some(1.0));
        assert!((cell.mean_iou3d.unwrap() - 1.0).abs() < 1e-12);
    }
}

/// The label files' viewpoint angle must agree with "yaw minus the viewing
/// ray of the box center column" to within the slack left by the files'
/// two-decimal rounding and the bbox-center approximation of the object
/// center.
#[test]
fn label_alpha_matches_the_ray_decomposition() {
    let calib_text = std::fs::read_to_string(fixture("kitti/calib/000000.txt")).unwrap();
    let label_text = std::fs::read_to_string(fixture("kitti/label_2/000000.txt")).unwrap();
    let k = parse_calib_file(&calib_text).unwrap().intrinsics().unwrap();
    let labels = parse_label_file(&label_text).unwrap();
    let mut checked = 0;
    for l in labels.iter().filter(|l| !l.is_dont_care()) {
        let ray = ray_angle(&k, l.bbox.center_u());
        let derived = wrap_angle(l.rotation_y - ray);
        let diff = wrap_angle(derived - l.alpha).abs();
        assert!(
            diff < 0.02,
            "{}: alpha {} vs derived {derived}",
            l.class_label,
            l.alpha
        );
        checked += 1;
    }
    assert_eq!(checked, 3);
}

#[test]
fn report_text_and_csv_render_the_toy_scenario() {
    let report = toy_report();
    let text = report.to_string();
    assert!(text.contains("Pedestrian"));
    assert!(text.contains("68.75"));
    let csv = report.to_csv();
    assert!(csv.starts_with("class,difficulty,ap,aos,os,mean_iou3d\n"));
    assert!(csv.contains("Pedestrian,Easy,68.75,53.125,"));
    // undefined classes keep their cells but leave values empty
    assert!(csv.contains("Car,Easy,,,,\n"));
}
