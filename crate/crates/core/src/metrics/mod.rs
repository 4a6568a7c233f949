//! Detection quality metrics: volumetric IoU, difficulty-gated greedy
//! matching, and 40-point average precision / orientation similarity.

pub mod iou;
pub mod matching;
pub mod report;

pub use iou::{bev_intersection_area, iou3d, monte_carlo_iou3d};
pub use matching::{
    match_frame, prepare_ground_truths, DetKind, DifficultyLevel, FrameMatch, GroundTruth, GtKind,
    PooledDetection, Prediction,
};
pub use report::{
    aos_r40, ap_r40, evaluate, evaluate_dirs, os, EvalCell, EvalConfig, EvalReport, MetricsError,
};
