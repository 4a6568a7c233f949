//! 2D→3D box lifting: recovering the camera-frame translation of a box with
//! known yaw and dimensions from the requirement that its projection fit the
//! 2D detection window tightly — every window side touched by at least one
//! projected corner.
//!
//! Each side/corner assignment turns the perspective equality
//! `u = (K[R|T]X)_x / (K[R|T]X)_z` into one equation linear in the unknown
//! translation `T` (the denominator is cleared), so four assigned sides give
//! a 4×3 least-squares system. Which corner touches which side is unknown,
//! so candidate assignments are enumerated and the solved candidates ranked
//! by how closely the reprojected box rectangle matches the detection.
//!
//! # Candidate enumeration
//!
//! The brute-force space is 8⁴ = 4096 assignments. Under the upright
//! (yaw-only) assumption most are redundant:
//!
//! - A corner's image column ignores its height, so the two corners of a
//!   vertical box edge constrain `x_min`/`x_max` identically — 4 vertical
//!   edge classes instead of 8 corners per x-side.
//! - The top window side is touched by a top-face corner (they all share one
//!   camera-frame height, and lower points project strictly below), and
//!   among the four top corners the image row is monotone in camera depth,
//!   so only the two depth-extreme top corners can touch. Which pair is
//!   depth-extreme depends only on the yaw. Same argument for the bottom.
//!
//! That yields 4·4·2·2 = 64 candidates with the same optimal residual as
//! the exhaustive set; exhaustive mode is kept as a correctness oracle.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    corners_local, global_from_local, project_box, ray_angle, BoxDims, CameraIntrinsics,
    GeometryError, Pose, Rect,
};
use crate::multibin::{decode, BinLayout, MultiBinError, MultiBinOutput};

/// Candidates closer to the camera than this depth (m) are discarded as
/// geometrically meaningless.
pub const MIN_DEPTH: f64 = 0.1;

/// Relative singular-value cutoff below which a constraint system is treated
/// as rank-deficient.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Candidates whose ranking errors differ by less than this are tied; the
/// earlier-enumerated one wins, keeping results deterministic.
pub const RANK_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("constraint system is rank-deficient (rank {rank} < 3)")]
    RankDeficient { rank: usize },
    #[error("no correspondence produced a finite in-front solution")]
    NoValidSolution,
    #[error("class {0:?} has no dimension prior")]
    UnknownClass(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Orientation(#[from] MultiBinError),
}

/// A 2D detection window with class and confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub class_label: String,
    pub score: f64,
}

impl Detection2D {
    pub fn new(
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        class_label: impl Into<String>,
        score: f64,
    ) -> Result<Self, LiftError> {
        let class_label = class_label.into();
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(LiftError::InvalidDetection("non-finite window side".into()));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(LiftError::InvalidDetection(format!(
                "window sides must be ordered, got x [{x_min}, {x_max}], y [{y_min}, {y_max}]"
            )));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(LiftError::InvalidDetection(format!(
                "score must be in [0, 1], got {score}"
            )));
        }
        if class_label.is_empty() {
            return Err(LiftError::InvalidDetection("empty class label".into()));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
            class_label,
            score,
        })
    }

    pub fn rect(&self) -> Rect {
        Rect {
            x_min: self.x_min,
            y_min: self.y_min,
            x_max: self.x_max,
            y_max: self.y_max,
        }
    }

    /// Image column of the window center, the reference for the viewing-ray
    /// angle.
    pub fn center_u(&self) -> f64 {
        (self.x_min + self.x_max) / 2.0
    }
}

/// One window side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    XMin,
    XMax,
    YMin,
    YMax,
}

pub const ALL_SIDES: [Side; 4] = [Side::XMin, Side::XMax, Side::YMin, Side::YMax];

/// A side/corner assignment: for each window side, the index (0..8, in the
/// geometry module's corner order) of the corner assumed to touch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Correspondence {
    pub x_min: usize,
    pub x_max: usize,
    pub y_min: usize,
    pub y_max: usize,
}

impl Correspondence {
    pub fn corner_for(&self, side: Side) -> usize {
        match side {
            Side::XMin => self.x_min,
            Side::XMax => self.x_max,
            Side::YMin => self.y_min,
            Side::YMax => self.y_max,
        }
    }
}

/// Candidate enumeration strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigMode {
    /// All 4096 corner assignments; the correctness oracle.
    Exhaustive,
    /// The 64-candidate class-merged subset (see module docs); the default.
    Pruned,
}

/// Enumerates candidate correspondences. `yaw` is ignored in exhaustive mode
/// but selects the depth-extreme corner classes in pruned mode (the depth
/// ordering of the box corners is fixed by the yaw alone).
pub fn enumerate_configs(mode: ConfigMode, yaw: f64) -> Vec<Correspondence> {
    match mode {
        ConfigMode::Exhaustive => {
            let mut out = Vec::with_capacity(4096);
            for x_min in 0..8 {
                for x_max in 0..8 {
                    for y_min in 0..8 {
                        for y_max in 0..8 {
                            out.push(Correspondence {
                                x_min,
                                x_max,
                                y_min,
                                y_max,
                            });
                        }
                    }
                }
            }
            out
        }
        ConfigMode::Pruned => {
            // Camera depth of a corner with object-frame signs (sx, sz) is
            // tz - sinθ·sx·dx/2 + cosθ·sz·dz/2, so the extreme sign patterns
            // depend only on the yaw (ties resolved toward +; tied classes
            // share identical constraint rows anyway).
            let (s, c) = yaw.sin_cos();
            let far = corner_bits(
                if s >= 0.0 { -1.0 } else { 1.0 },
                if c >= 0.0 { 1.0 } else { -1.0 },
            );
            let near = 0b101 ^ far; // opposite signs on both axes
                                    // Vertical-edge class representatives: the four bottom corners.
            let verticals = [0usize, 1, 4, 5];
            let tops = [near | 0b010, far | 0b010];
            let bottoms = [near, far];
            let mut out = Vec::with_capacity(64);
            for &x_min in &verticals {
                for &x_max in &verticals {
                    for &y_min in &tops {
                        for &y_max in &bottoms {
                            out.push(Correspondence {
                                x_min,
                                x_max,
                                y_min,
                                y_max,
                            });
                        }
                    }
                }
            }
            out
        }
    }
}

/// Corner index bits (bit 1 clear: bottom face) for object-frame sign
/// choices on the x and z axes.
fn corner_bits(sx: f64, sz: f64) -> usize {
    ((sx < 0.0) as usize) | (((sz < 0.0) as usize) << 2)
}

/// The linear system `A·T = b` assembled from side/corner constraints, one
/// row per retained side.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub sides: Vec<Side>,
}

/// Builds the full four-row constraint system for one correspondence.
pub fn build_constraint_system(
    k: &CameraIntrinsics,
    yaw: f64,
    dims: BoxDims,
    det: &Detection2D,
    corr: Correspondence,
) -> ConstraintSystem {
    build_system_for_sides(k, yaw, dims, det, corr, &ALL_SIDES)
}

fn build_system_for_sides(
    k: &CameraIntrinsics,
    yaw: f64,
    dims: BoxDims,
    det: &Detection2D,
    corr: Correspondence,
    sides: &[Side],
) -> ConstraintSystem {
    let r = crate::geometry::rotation_from_yaw(yaw);
    let rotated: Vec<Vector3<f64>> = corners_local(dims).iter().map(|x| r * x).collect();
    let mut a = DMatrix::zeros(sides.len(), 3);
    let mut b = DVector::zeros(sides.len());
    for (row, &side) in sides.iter().enumerate() {
        let (ar, br) = constraint_row(k, det, side, &rotated[corr.corner_for(side)]);
        a.set_row(row, &nalgebra::RowVector3::from(ar));
        b[row] = br;
    }
    ConstraintSystem {
        a,
        b,
        sides: sides.to_vec(),
    }
}

/// One cleared-denominator perspective constraint: the projection of the
/// rotated corner `rc` (translation still unknown) must land on the given
/// window side. Returns the row of `A` and the entry of `b`.
fn constraint_row(
    k: &CameraIntrinsics,
    det: &Detection2D,
    side: Side,
    rc: &Vector3<f64>,
) -> ([f64; 3], f64) {
    let [t0, t1, t2] = k.translation;
    let (a, shift) = match side {
        Side::XMin => ([k.fx, 0.0, k.cx - det.x_min], det.x_min * t2 - t0),
        Side::XMax => ([k.fx, 0.0, k.cx - det.x_max], det.x_max * t2 - t0),
        Side::YMin => ([0.0, k.fy, k.cy - det.y_min], det.y_min * t2 - t1),
        Side::YMax => ([0.0, k.fy, k.cy - det.y_max], det.y_max * t2 - t1),
    };
    let b = -(a[0] * rc.x + a[1] * rc.y + a[2] * rc.z) + shift;
    (a, b)
}

/// Least-squares translation from a constraint system, with an explicit
/// rank check: the returned scalar is `‖A·T − b‖₂`.
pub fn solve_translation(sys: &ConstraintSystem) -> Result<(Vector3<f64>, f64), LiftError> {
    let svd = sys.a.clone().svd(true, true);
    let sv_max = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let tol = sv_max * RANK_REL_TOL;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < 3 {
        return Err(LiftError::RankDeficient { rank });
    }
    let t = svd.solve(&sys.b, tol).expect("SVD factors were requested");
    let t = Vector3::new(t[0], t[1], t[2]);
    let residual = (&sys.a * t - &sys.b).norm();
    Ok((t, residual))
}

/// Optional handling of detections truncated by the image border.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderTruncation {
    pub image_width: f64,
    pub image_height: f64,
    /// A side within this many pixels of the border counts as truncated.
    pub margin: f64,
}

impl BorderTruncation {
    pub fn new(image_width: f64, image_height: f64) -> Self {
        Self {
            image_width,
            image_height,
            margin: 1.0,
        }
    }

    fn is_truncated(&self, det: &Detection2D, side: Side) -> bool {
        match side {
            Side::XMin => det.x_min <= self.margin,
            Side::XMax => det.x_max >= self.image_width - self.margin,
            Side::YMin => det.y_min <= self.margin,
            Side::YMax => det.y_max >= self.image_height - self.margin,
        }
    }
}

/// Knobs for [`lift_with_options`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftOptions {
    pub mode: ConfigMode,
    /// When set, border-touching window sides are dropped from the
    /// constraint set (3-row systems still pass the rank check; with two or
    /// more sides dropped every candidate is rank-deficient).
    pub drop_truncated_sides: Option<BorderTruncation>,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            mode: ConfigMode::Pruned,
            drop_truncated_sides: None,
        }
    }
}

/// Where lifting gets box dimensions from.
#[derive(Debug, Clone, Copy)]
pub enum DimsSource<'a> {
    /// Explicit per-detection dimensions.
    Explicit(BoxDims),
    /// Per-class prior table lookup by the detection's class label.
    ClassPrior(&'a DimPriors),
}

/// Per-class dimension priors, keyed by class label with values in KITTI
/// label order (height, width, length), meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DimPriors {
    pub by_class: BTreeMap<String, [f64; 3]>,
}

impl DimPriors {
    pub fn lookup(&self, class_label: &str) -> Result<BoxDims, LiftError> {
        let &[h, w, l] = self
            .by_class
            .get(class_label)
            .ok_or_else(|| LiftError::UnknownClass(class_label.to_string()))?;
        BoxDims::from_hwl(h, w, l).map_err(LiftError::from)
    }
}

impl Default for DimPriors {
    /// Median dimensions of the three evaluated classes on the standard
    /// training split.
    fn default() -> Self {
        let by_class = BTreeMap::from([
            ("Car".to_string(), [1.52, 1.63, 3.88]),
            ("Pedestrian".to_string(), [1.76, 0.66, 0.84]),
            ("Cyclist".to_string(), [1.74, 0.60, 1.76]),
        ]);
        Self { by_class }
    }
}

/// A recovered 3D box with the evidence behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    pub pose: Pose,
    pub dims: BoxDims,
    pub chosen: Correspondence,
    /// L2 distance (px) between the detection sides and the reprojected
    /// rectangle's sides, over the retained sides; the ranking criterion.
    pub residual: f64,
    /// Raw least-squares residual `‖A·T − b‖` of the chosen system; scales
    /// with depth, so it is reported but not used for ranking.
    pub algebraic_residual: f64,
    pub reprojected_box: Rect,
}

/// Lifts one detection with the default options but an explicit enumeration
/// mode.
pub fn lift(
    k: &CameraIntrinsics,
    yaw_global: f64,
    dims: BoxDims,
    det: &Detection2D,
    mode: ConfigMode,
) -> Result<LiftResult, LiftError> {
    lift_with_options(
        k,
        yaw_global,
        dims,
        det,
        &LiftOptions {
            mode,
            drop_truncated_sides: None,
        },
    )
}

/// Lifts one detection: enumerates correspondences, solves each, discards
/// behind-camera and non-finite candidates, and returns the candidate whose
/// reprojected rectangle best matches the detection window. Deterministic:
/// ties break toward the earlier-enumerated candidate.
pub fn lift_with_options(
    k: &CameraIntrinsics,
    yaw_global: f64,
    dims: BoxDims,
    det: &Detection2D,
    opts: &LiftOptions,
) -> Result<LiftResult, LiftError> {
    let sides: Vec<Side> = match &opts.drop_truncated_sides {
        None => ALL_SIDES.to_vec(),
        Some(border) => ALL_SIDES
            .iter()
            .copied()
            .filter(|&s| !border.is_truncated(det, s))
            .collect(),
    };

    let r = crate::geometry::rotation_from_yaw(yaw_global);
    let rotated: Vec<Vector3<f64>> = corners_local(dims).iter().map(|x| r * x).collect();

    let mut best: Option<LiftResult> = None;
    for corr in enumerate_configs(opts.mode, yaw_global) {
        let mut a = DMatrix::zeros(sides.len(), 3);
        let mut b = DVector::zeros(sides.len());
        for (row, &side) in sides.iter().enumerate() {
            let (ar, br) = constraint_row(k, det, side, &rotated[corr.corner_for(side)]);
            a.set_row(row, &nalgebra::RowVector3::from(ar));
            b[row] = br;
        }
        let sys = ConstraintSystem {
            a,
            b,
            sides: sides.clone(),
        };
        let (t, algebraic) = match solve_translation(&sys) {
            Ok(sol) => sol,
            Err(LiftError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !t.iter().all(|v| v.is_finite()) || t.z <= MIN_DEPTH {
            continue;
        }
        let pose = Pose::from_yaw_t(yaw_global, [t.x, t.y, t.z]);
        let projected = match project_box(k, &pose, dims) {
            Ok(p) => p,
            Err(_) => continue, // some corner fell behind the camera
        };
        let err = side_error(&projected.rect, det, &sides);
        if best
            .as_ref()
            .is_none_or(|cur| err < cur.residual - RANK_TIE_EPS)
        {
            best = Some(LiftResult {
                pose,
                dims,
                chosen: corr,
                residual: err,
                algebraic_residual: algebraic,
                reprojected_box: projected.rect,
            });
        }
    }
    best.ok_or(LiftError::NoValidSolution)
}

/// L2 distance between corresponding sides of the reprojected rectangle and
/// the detection window, over the retained sides.
fn side_error(rect: &Rect, det: &Detection2D, sides: &[Side]) -> f64 {
    sides
        .iter()
        .map(|side| {
            let d = match side {
                Side::XMin => rect.x_min - det.x_min,
                Side::XMax => rect.x_max - det.x_max,
                Side::YMin => rect.y_min - det.y_min,
                Side::YMax => rect.y_max - det.y_max,
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Full orientation-driven lifting: decodes the local angle from the bin
/// head output, composes it with the viewing-ray angle of the window center
/// into a global yaw, resolves dimensions, and lifts.
pub fn lift_with_multibin(
    k: &CameraIntrinsics,
    det: &Detection2D,
    output: &MultiBinOutput,
    layout: &BinLayout,
    dims_source: DimsSource,
    opts: &LiftOptions,
) -> Result<LiftResult, LiftError> {
    let theta_ray = ray_angle(k, det.center_u());
    let theta_local = decode(output, layout)?;
    let yaw = global_from_local(theta_local, theta_ray);
    let dims = match dims_source {
        DimsSource::Explicit(d) => d,
        DimsSource::ClassPrior(priors) => priors.lookup(&det.class_label)?,
    };
    lift_with_options(k, yaw, dims, det, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_from_yaw;
    use crate::synth::{perturb_detection, sample_scene, SynthParams};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn exhaustive_enumerates_all_assignments() {
        let configs = enumerate_configs(ConfigMode::Exhaustive, 0.3);
        assert_eq!(configs.len(), 4096);
        let unique: HashSet<_> = configs.iter().collect();
        assert_eq!(unique.len(), 4096);
    }

    #[test]
    fn pruned_is_small_and_class_shaped() {
        for yaw in [-3.0, -1.2, 0.0, 0.7, std::f64::consts::FRAC_PI_2, 3.1] {
            let configs = enumerate_configs(ConfigMode::Pruned, yaw);
            assert_eq!(configs.len(), 64);
            let unique: HashSet<_> = configs.iter().collect();
            assert_eq!(unique.len(), 64);
            for c in &configs {
                // x-sides draw from bottom-face vertical-edge representatives,
                // y_min from top corners, y_max from bottom corners.
                assert!([0, 1, 4, 5].contains(&c.x_min));
                assert!([0, 1, 4, 5].contains(&c.x_max));
                assert_eq!(c.y_min >> 1 & 1, 1, "y_min must be a top corner");
                assert_eq!(c.y_max >> 1 & 1, 0, "y_max must be a bottom corner");
            }
        }
    }

    #[test]
    fn identity_camera_row_reduction() {
        // With fx=fy=1, cx=cy=0 the x_min row collapses to
        // (1, 0, -x_min)·(R X + T) = 0.
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let det = Detection2D::new(-0.3, -0.2, 0.4, 0.5, "Car", 1.0).unwrap();
        let dims = BoxDims::new(3.9, 1.5, 1.6).unwrap();
        let corr = Correspondence {
            x_min: 5,
            x_max: 0,
            y_min: 2,
            y_max: 1,
        };
        let yaw = 0.6;
        let sys = build_constraint_system(&k, yaw, dims, &det, corr);
        assert_eq!(sys.a.row(0).transpose(), Vector3::new(1.0, 0.0, 0.3));
        let rc = rotation_from_yaw(yaw) * corners_local(dims)[5];
        assert_relative_eq!(sys.b[0], -(rc.x - det.x_min * rc.z), epsilon = 1e-15);
    }

    #[test]
    fn constraint_rows_scale_with_camera_and_window() {
        // Scaling the pixel grid (K and the window) by c scales each row
        // linearly, leaving the solution unchanged.
        let k = CameraIntrinsics::new(700.0, 710.0, 600.0, 180.0).unwrap();
        let det = Detection2D::new(400.0, 150.0, 600.0, 240.0, "Car", 0.9).unwrap();
        let dims = BoxDims::new(3.9, 1.5, 1.6).unwrap();
        let corr = Correspondence {
            x_min: 1,
            x_max: 4,
            y_min: 6,
            y_max: 0,
        };
        let base = solve_translation(&build_constraint_system(&k, 0.4, dims, &det, corr)).unwrap();
        let c = 3.7;
        let ks = CameraIntrinsics::new(c * k.fx, c * k.fy, c * k.cx, c * k.cy).unwrap();
        let dets = Detection2D::new(
            c * det.x_min,
            c * det.y_min,
            c * det.x_max,
            c * det.y_max,
            "Car",
            0.9,
        )
        .unwrap();
        let scaled =
            solve_translation(&build_constraint_system(&ks, 0.4, dims, &dets, corr)).unwrap();
        assert_relative_eq!(base.0, scaled.0, epsilon = 1e-9);
    }

    /// The correspondence actually realized by a projected box: per side,
    /// the index of the extreme projected corner.
    fn true_correspondence(k: &CameraIntrinsics, truth: &crate::geometry::Box3D) -> Correspondence {
        let pb = project_box(k, &truth.pose, truth.dims).unwrap();
        let pick = |f: fn(&crate::geometry::PixelPoint) -> f64, max: bool| {
            let mut best = 0;
            for i in 1..8 {
                let better = if max {
                    f(&pb.corners[i]) > f(&pb.corners[best])
                } else {
                    f(&pb.corners[i]) < f(&pb.corners[best])
                };
                if better {
                    best = i;
                }
            }
            best
        };
        Correspondence {
            x_min: pick(|p| p.u, false),
            x_max: pick(|p| p.u, true),
            y_min: pick(|p| p.v, false),
            y_max: pick(|p| p.v, true),
        }
    }

    #[test]
    fn true_translation_satisfies_true_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = SynthParams::default();
        for _ in 0..50 {
            let scene = sample_scene(&mut rng, &params);
            let corr = true_correspondence(&scene.k, &scene.truth);
            let sys = build_constraint_system(
                &scene.k,
                scene.truth.pose.orientation.theta,
                scene.truth.dims,
                &scene.det,
                corr,
            );
            let t_true = scene.truth.pose.translation();
            let residual = (&sys.a * t_true - &sys.b).norm();
            assert!(
                residual < 1e-9,
                "true T violates its own system: {residual}"
            );

            let (t, solved_residual) = solve_translation(&sys).unwrap();
            assert!(
                (t - t_true).norm() < 1e-9,
                "solver strayed: {:?}",
                t - t_true
            );
            // Rows carry pixel·depth units (magnitudes ~1e4), so the solved
            // residual is only meaningful relative to the system's scale.
            assert!(solved_residual < 1e-9 * sys.b.norm().max(1.0));
        }
    }

    #[test]
    fn duplicated_rows_leave_solution_unchanged() {
        let k = CameraIntrinsics::new(700.0, 700.0, 620.0, 190.0).unwrap();
        let det = Detection2D::new(500.0, 160.0, 700.0, 260.0, "Car", 1.0).unwrap();
        let dims = BoxDims::new(3.9, 1.5, 1.6).unwrap();
        let corr = Correspondence {
            x_min: 1,
            x_max: 4,
            y_min: 7,
            y_max: 0,
        };
        let sys = build_constraint_system(&k, 1.1, dims, &det, corr);
        let mut stacked_a = DMatrix::zeros(8, 3);
        let mut stacked_b = DVector::zeros(8);
        for i in 0..4 {
            stacked_a.set_row(i, &sys.a.row(i));
            stacked_a.set_row(i + 4, &sys.a.row(i));
            stacked_b[i] = sys.b[i];
            stacked_b[i + 4] = sys.b[i];
        }
        let doubled = ConstraintSystem {
            a: stacked_a,
            b: stacked_b,
            sides: [sys.sides.clone(), sys.sides.clone()].concat(),
        };
        let (t1, _) = solve_translation(&sys).unwrap();
        let (t2, _) = solve_translation(&doubled).unwrap();
        assert_relative_eq!(t1, t2, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_correspondences_cannot_leak_through() {
        let k = CameraIntrinsics::new(700.0, 700.0, 620.0, 190.0).unwrap();
        let det = Detection2D::new(500.0, 160.0, 700.0, 260.0, "Car", 1.0).unwrap();
        let dims = BoxDims::new(3.9, 1.5, 1.6).unwrap();

        // All four rows referencing one corner: the rows still span rank 3
        // (they differ through the window-side values), but the system's
        // exact solution puts that corner at the camera pinhole — every
        // cleared-denominator row vanishes there. The depth gate is what
        // keeps such solutions out of lift results.
        let corr = Correspondence {
            x_min: 3,
            x_max: 3,
            y_min: 3,
            y_max: 3,
        };
        let sys = build_constraint_system(&k, 0.0, dims, &det, corr);
        let (t, _) = solve_translation(&sys).unwrap();
        let pinhole = -(rotation_from_yaw(0.0) * corners_local(dims)[3]);
        assert!(
            (t - pinhole).norm() < 1e-3,
            "expected the spurious pinhole solution, got {t:?}"
        );
        assert!(t.z <= MIN_DEPTH, "depth gate would not catch {t:?}");

        // A genuinely rank-deficient system: two same-axis rows span only
        // the x/z plane of the unknown, leaving the vertical direction free.
        let two_rows = build_system_for_sides(&k, 0.0, dims, &det, corr, &[Side::XMin, Side::XMax]);
        match solve_translation(&two_rows) {
            Err(LiftError::RankDeficient { rank }) => assert!(rank < 3),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn noise_free_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = SynthParams::default();
        for i in 0..60 {
            let scene = sample_scene(&mut rng, &params);
            let yaw = scene.truth.pose.orientation.theta;
            let result = lift(
                &scene.k,
                yaw,
                scene.truth.dims,
                &scene.det,
                ConfigMode::Pruned,
            )
            .unwrap_or_else(|e| panic!("scene {i}: {e}"));
            let t_err = (result.pose.translation() - scene.truth.pose.translation()).norm();
            assert!(t_err < 1e-6, "scene {i}: translation off by {t_err}");
            let rect_err = result.reprojected_box.max_side_distance(&scene.det.rect());
            assert!(rect_err < 1e-6, "scene {i}: rectangle off by {rect_err}");
            assert!(result.residual < 1e-6);
        }
    }

    #[test]
    fn pruned_matches_exhaustive_on_clean_scenes() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let params = SynthParams::default();
        for i in 0..20 {
            let scene = sample_scene(&mut rng, &params);
            let yaw = scene.truth.pose.orientation.theta;
            let pruned = lift(
                &scene.k,
                yaw,
                scene.truth.dims,
                &scene.det,
                ConfigMode::Pruned,
            )
            .unwrap();
            let exhaustive = lift(
                &scene.k,
                yaw,
                scene.truth.dims,
                &scene.det,
                ConfigMode::Exhaustive,
            )
            .unwrap();
            let gap = (pruned.pose.translation() - exhaustive.pose.translation()).norm();
            assert!(gap < 1e-9, "scene {i}: modes disagree by {gap}");
            assert!((pruned.residual - exhaustive.residual).abs() < 1e-9);
        }
    }

    #[test]
    fn corrupted_windows_are_never_silently_absorbed() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let params = SynthParams::default();
        let scene = sample_scene(&mut rng, &params);
        let yaw = scene.truth.pose.orientation.theta;

        // A rigidly shifted window corresponds to a different viewing ray;
        // some other translation may legitimately (almost) realize it. What
        // must hold is honesty: the reported residual is exactly the side
        // misfit of the returned candidate, never an understatement.
        let shifted = Detection2D::new(
            scene.det.x_min + 200.0,
            scene.det.y_min + 200.0,
            scene.det.x_max + 200.0,
            scene.det.y_max + 200.0,
            scene.det.class_label.clone(),
            scene.det.score,
        )
        .unwrap();
        match lift(
            &scene.k,
            yaw,
            scene.truth.dims,
            &shifted,
            ConfigMode::Pruned,
        ) {
            Ok(result) => {
                let recomputed = side_error(&result.reprojected_box, &shifted, &ALL_SIDES);
                assert_relative_eq!(result.residual, recomputed, epsilon = 1e-9);
            }
            Err(LiftError::NoValidSolution) => {}
            Err(other) => panic!("unexpected error: {other}"),
        }

        // Stretching one side wrecks the window's aspect ratio, which no
        // depth can repair (the projected width and height shrink together
        // with distance): the misfit must surface as a large residual or no
        // solution at all.
        let stretched = Detection2D::new(
            scene.det.x_min,
            scene.det.y_min,
            scene.det.x_max + 200.0,
            scene.det.y_max,
            scene.det.class_label.clone(),
            scene.det.score,
        )
        .unwrap();
        match lift(
            &scene.k,
            yaw,
            scene.truth.dims,
            &stretched,
            ConfigMode::Pruned,
        ) {
            Ok(result) => {
                let recomputed = side_error(&result.reprojected_box, &stretched, &ALL_SIDES);
                assert_relative_eq!(result.residual, recomputed, epsilon = 1e-9);
                assert!(
                    result.residual > 5.0,
                    "impossible aspect absorbed with residual {}",
                    result.residual
                );
            }
            Err(LiftError::NoValidSolution) => {}
            Err(other) => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn dropping_a_corrupted_border_side_recovers_truth() {
        let params = SynthParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        // Find a scene comfortably away from the right border, then pretend
        // the detector clipped it there.
        let scene = loop {
            let s = sample_scene(&mut rng, &params);
            if s.det.x_max < params.image_width - 50.0 {
                break s;
            }
        };
        let yaw = scene.truth.pose.orientation.theta;
        let clipped = Detection2D::new(
            scene.det.x_min,
            scene.det.y_min,
            params.image_width,
            scene.det.y_max,
            scene.det.class_label.clone(),
            scene.det.score,
        )
        .unwrap();
        let with_drop = lift_with_options(
            &scene.k,
            yaw,
            scene.truth.dims,
            &clipped,
            &LiftOptions {
                mode: ConfigMode::Pruned,
                drop_truncated_sides: Some(BorderTruncation::new(
                    params.image_width,
                    params.image_height,
                )),
            },
        )
        .unwrap();
        let err_drop = (with_drop.pose.translation() - scene.truth.pose.translation()).norm();
        assert!(err_drop < 1e-6, "three-side recovery off by {err_drop}");

        let without_drop = lift(
            &scene.k,
            yaw,
            scene.truth.dims,
            &clipped,
            ConfigMode::Pruned,
        )
        .unwrap();
        let err_keep = (without_drop.pose.translation() - scene.truth.pose.translation()).norm();
        assert!(
            err_keep > err_drop * 1e3,
            "corrupted side should hurt: kept {err_keep} vs dropped {err_drop}"
        );
    }

    #[test]
    fn centered_detection_with_zero_local_angle_gives_zero_yaw() {
        let k = CameraIntrinsics::new(700.0, 700.0, 621.0, 187.0).unwrap();
        // A yaw-0 box on the optical axis projects symmetrically about cx.
        let truth = crate::geometry::Box3D::new(
            Pose::from_yaw_t(0.0, [0.0, 1.0, 25.0]),
            BoxDims::new(3.9, 1.5, 1.6).unwrap(),
        );
        let pb = project_box(&k, &truth.pose, truth.dims).unwrap();
        let det = Detection2D::new(
            pb.rect.x_min,
            pb.rect.y_min,
            pb.rect.x_max,
            pb.rect.y_max,
            "Car",
            1.0,
        )
        .unwrap();
        assert_relative_eq!(det.center_u(), k.cx, epsilon = 1e-9);
        let layout = crate::multibin::make_layout(2, 1.1).unwrap();
        let output = MultiBinOutput::ideal(&layout, 0.0);
        let result = lift_with_multibin(
            &k,
            &det,
            &output,
            &layout,
            DimsSource::Explicit(truth.dims),
            &LiftOptions::default(),
        )
        .unwrap();
        assert!(result.pose.orientation.theta.abs() < 1e-12);
    }

    #[test]
    fn multibin_end_to_end_recovers_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let params = SynthParams::default();
        let layout = crate::multibin::make_layout(2, 1.1).unwrap();
        for i in 0..40 {
            let scene = sample_scene(&mut rng, &params);
            let output = MultiBinOutput::ideal(&layout, scene.theta_local);
            let result = lift_with_multibin(
                &scene.k,
                &scene.det,
                &output,
                &layout,
                DimsSource::Explicit(scene.truth.dims),
                &LiftOptions::default(),
            )
            .unwrap();
            let t_err = (result.pose.translation() - scene.truth.pose.translation()).norm();
            assert!(t_err < 1e-6, "scene {i}: {t_err}");
        }
    }

    #[test]
    fn class_priors_are_used_and_missing_classes_rejected() {
        let k = CameraIntrinsics::new(700.0, 700.0, 621.0, 187.0).unwrap();
        let priors = DimPriors::default();
        let truth_dims = priors.lookup("Car").unwrap();
        let truth =
            crate::geometry::Box3D::new(Pose::from_yaw_t(0.4, [2.0, 1.2, 30.0]), truth_dims);
        let pb = project_box(&k, &truth.pose, truth.dims).unwrap();
        let det = Detection2D::new(
            pb.rect.x_min,
            pb.rect.y_min,
            pb.rect.x_max,
            pb.rect.y_max,
            "Car",
            0.8,
        )
        .unwrap();
        let layout = crate::multibin::make_layout(2, 1.1).unwrap();
        let theta_ray = ray_angle(&k, det.center_u());
        let theta_local = crate::geometry::local_from_global(0.4, theta_ray);
        let output = MultiBinOutput::ideal(&layout, theta_local);
        let result = lift_with_multibin(
            &k,
            &det,
            &output,
            &layout,
            DimsSource::ClassPrior(&priors),
            &LiftOptions::default(),
        )
        .unwrap();
        assert_eq!(result.dims, truth_dims);
        assert!((result.pose.translation() - truth.pose.translation()).norm() < 1e-6);

        let mut unknown = det.clone();
        unknown.class_label = "Tram".to_string();
        let err = lift_with_multibin(
            &k,
            &unknown,
            &output,
            &layout,
            DimsSource::ClassPrior(&priors),
            &LiftOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LiftError::UnknownClass(c) if c == "Tram"));
    }

    #[test]
    fn translation_error_grows_with_pixel_noise() {
        let params = SynthParams::default();
        let amplitudes = [0.0, 2.0, 8.0];
        let mut medians = Vec::new();
        for &amp in &amplitudes {
            // Same seed per amplitude: identical scenes and unit noise,
            // only the scale differs.
            let mut rng = ChaCha8Rng::seed_from_u64(71);
            let mut errors = Vec::new();
            for _ in 0..30 {
                let scene = sample_scene(&mut rng, &params);
                let noisy = perturb_detection(&mut rng, &scene.det, amp);
                let yaw = scene.truth.pose.orientation.theta;
                if let Ok(result) =
                    lift(&scene.k, yaw, scene.truth.dims, &noisy, ConfigMode::Pruned)
                {
                    errors
                        .push((result.pose.translation() - scene.truth.pose.translation()).norm());
                }
            }
            errors.sort_by(|a, b| a.total_cmp(b));
            medians.push(errors[errors.len() / 2]);
        }
        for pair in medians.windows(2) {
            assert!(
                pair[1] >= pair[0],
                "median error decreased under noise: {medians:?}"
            );
        }
    }

    #[test]
    fn detection_validation() {
        assert!(Detection2D::new(10.0, 5.0, 10.0, 20.0, "Car", 0.5).is_err());
        assert!(Detection2D::new(10.0, 25.0, 30.0, 20.0, "Car", 0.5).is_err());
        assert!(Detection2D::new(10.0, 5.0, 30.0, 20.0, "Car", 1.5).is_err());
        assert!(Detection2D::new(10.0, 5.0, 30.0, 20.0, "", 0.5).is_err());
        assert!(Detection2D::new(f64::NAN, 5.0, 30.0, 20.0, "Car", 0.5).is_err());
        assert!(Detection2D::new(10.0, 5.0, 30.0, 20.0, "Car", 0.5).is_ok());
    }
}
