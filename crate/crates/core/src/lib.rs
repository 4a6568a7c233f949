//! Monocular 3D bounding-box recovery and evaluation.
//!
//! Given a 2D detection window, a viewing-ray-relative orientation estimate
//! and a dimension prior, this crate recovers the full 3D box pose by solving
//! the tight-fit projection constraints: every side of the 2D window must be
//! touched by the projection of at least one 3D box corner. The remaining
//! pieces are the discrete-continuous orientation representation the
//! constraint solver consumes, KITTI-format I/O, and a KITTI-style evaluation
//! stack (AP over 40 recall points, AOS, OS, 3D IoU).
//!
//! # Pipeline
//!
//! 1. **[`multibin`]** – decode a per-bin confidence/residual head output into
//!    a local (ray-relative) orientation angle.
//! 2. **[`geometry`]** – combine with the ray angle through the detection
//!    center to obtain the global yaw.
//! 3. **[`lifting`]** – enumerate corner-to-side correspondence
//!    configurations, solve each linear system for the translation, keep the
//!    candidate whose reprojection fits the detection window best.
//! 4. **[`metrics`]** – match recovered boxes against ground truth and report
//!    AP / AOS / OS / mean 3D IoU per class and difficulty.
//!
//! [`kitti`] reads and writes the on-disk formats, [`synth`] generates seeded
//! synthetic scenes for round-trip verification, and [`render`] draws
//! wireframe overlays as SVG.

pub mod angle;
pub mod config;
pub mod geometry;
pub mod kitti;
pub mod lifting;
pub mod metrics;
pub mod multibin;
pub mod render;
pub mod synth;

pub use angle::wrap_angle;
pub use config::RunConfig;
pub use geometry::{Box3D, BoxDims, CameraIntrinsics, Orientation, PixelPoint, Pose};
pub use kitti::{FrameId, KittiCalib, KittiLabel, PredictionFile, PredictionRecord};
pub use lifting::{Correspondence, Detection2D, LiftResult};
pub use metrics::{EvalConfig, EvalReport};
pub use multibin::{BinLayout, LossWeights, MultiBinOutput, MultiBinTarget};
