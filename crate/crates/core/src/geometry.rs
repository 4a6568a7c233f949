//! Pure projection math: camera model, box corners, yaw rotation, ray angles
//! and image-plane projection of 3D boxes.
//!
//! # Conventions
//!
//! Camera frame follows KITTI: x right, y down, z forward (optical axis).
//! The object frame is anchored at the box center with x along the heading
//! (length), y vertical (height) and z lateral (width); yaw is a rotation
//! about the camera y-axis and a yaw of zero points the heading along the
//! camera x-axis, so `Orientation::theta` carries the same value as a KITTI
//! `rotation_y` field.
//!
//! # Corner order
//!
//! [`corners_local`] returns the 8 corners in a fixed order that other
//! modules and file formats rely on: corner `k` (0..=7) takes the sign
//! pattern of the bits of `k`, bit 0 → x, bit 1 → y, bit 2 → z, with a clear
//! bit meaning `+`. Corner 0 is `[dx/2, dy/2, dz/2]`, corner 7 is
//! `[-dx/2, -dy/2, -dz/2]`. Corners with bit 1 set (indices 2, 3, 6, 7) have
//! negative y, which is *up* in the camera frame: they form the top face.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap_angle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid box dimensions: {0}")]
    InvalidDims(String),
    #[error("point projects behind the camera (depth {depth})")]
    PointBehindCamera { depth: f64 },
}

/// Pinhole camera parameters, optionally carrying the fourth column of a
/// KITTI `P2` projection row set (the baseline translation, in m·px).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Fourth projection column; zero for a plain pinhole camera.
    pub translation: [f64; 3],
    /// Full 3×4 row set as parsed from a calib file, kept so re-emission is
    /// lossless. `None` when the camera was built from bare pinhole params.
    rows: Option<[[f64; 4]; 3]>,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if fx.is_nan() || fx <= 0.0 || fy.is_nan() || fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if !cx.is_finite() || !cy.is_finite() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point must be finite, got cx={cx}, cy={cy}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            translation: [0.0; 3],
            rows: None,
        })
    }

    /// Builds from a full 3×4 projection row set (KITTI `P2` layout:
    /// `fx 0 cx t0 / 0 fy cy t1 / 0 0 1 t2`). The rows are retained verbatim.
    pub fn from_projection_rows(rows: [[f64; 4]; 3]) -> Result<Self, GeometryError> {
        let mut k = Self::new(rows[0][0], rows[1][1], rows[0][2], rows[1][2])?;
        k.translation = [rows[0][3], rows[1][3], rows[2][3]];
        k.rows = Some(rows);
        Ok(k)
    }

    /// The 3×4 row set: the parsed original when available, otherwise
    /// synthesized from the pinhole parameters.
    pub fn projection_rows(&self) -> [[f64; 4]; 3] {
        self.rows.unwrap_or([
            [self.fx, 0.0, self.cx, self.translation[0]],
            [0.0, self.fy, self.cy, self.translation[1]],
            [0.0, 0.0, 1.0, self.translation[2]],
        ])
    }
}

/// Box extents along the object axes, all in meters.
///
/// `dx` runs along the heading axis, `dy` along the vertical axis, `dz`
/// laterally; for a KITTI label `(h, w, l)` maps to `(dy, dz, dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl BoxDims {
    pub fn new(dx: f64, dy: f64, dz: f64) -> Result<Self, GeometryError> {
        if !(dx > 0.0 && dy > 0.0 && dz > 0.0) {
            return Err(GeometryError::InvalidDims(format!(
                "extents must be strictly positive, got ({dx}, {dy}, {dz})"
            )));
        }
        Ok(Self { dx, dy, dz })
    }

    /// From KITTI label order: height, width, length.
    pub fn from_hwl(h: f64, w: f64, l: f64) -> Result<Self, GeometryError> {
        Self::new(l, h, w)
    }

    /// To KITTI label order: height, width, length.
    pub fn to_hwl(self) -> (f64, f64, f64) {
        (self.dy, self.dz, self.dx)
    }

    pub fn volume(self) -> f64 {
        self.dx * self.dy * self.dz
    }
}

/// Object orientation. Only `theta` (yaw) is free; elevation and roll are
/// carried for residual attribution but pinned to zero by the upright
/// assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    /// Yaw about the camera y-axis, normalized to `[-π, π)`.
    pub theta: f64,
    /// Elevation; always 0.
    pub phi: f64,
    /// Roll; always 0.
    pub alpha_roll: f64,
}

impl Orientation {
    pub fn from_yaw(theta: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            phi: 0.0,
            alpha_roll: 0.0,
        }
    }
}

/// Rigid pose of a box: orientation plus camera-frame center translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub orientation: Orientation,
    /// Box center in the camera frame, meters.
    pub t: [f64; 3],
}

impl Pose {
    pub fn from_yaw_t(theta: f64, t: [f64; 3]) -> Self {
        Self {
            orientation: Orientation::from_yaw(theta),
            t,
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_from_yaw(self.orientation.theta)
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.t[0], self.t[1], self.t[2])
    }
}

/// A full 3D bounding box: pose of the center plus extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub pose: Pose,
    pub dims: BoxDims,
}

impl Box3D {
    pub fn new(pose: Pose, dims: BoxDims) -> Self {
        Self { pose, dims }
    }

    /// Footprint corners in the camera x–z plane, counter-clockwise.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.pose.orientation.theta.sin_cos();
        let (hx, hz) = (self.dims.dx / 2.0, self.dims.dz / 2.0);
        let (tx, tz) = (self.pose.t[0], self.pose.t[2]);
        // (x, z) sign pairs chosen so the loop is CCW; the in-plane rotation
        // has determinant 1 and preserves that.
        [(hx, hz), (-hx, hz), (-hx, -hz), (hx, -hz)]
            .map(|(x, z)| [tx + x * c + z * s, tz - x * s + z * c])
    }

    /// Vertical extent `(y_min, y_max)` in the camera frame (y points down).
    pub fn y_interval(&self) -> (f64, f64) {
        let half = self.dims.dy / 2.0;
        (self.pose.t[1] - half, self.pose.t[1] + half)
    }
}

/// Image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

/// Axis-aligned image rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center_u(&self) -> f64 {
        (self.x_min + self.x_max) / 2.0
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.u >= self.x_min && p.u <= self.x_max && p.v >= self.y_min && p.v <= self.y_max
    }

    /// Contains `other` entirely, with a slack of `tol` pixels.
    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        other.x_min >= self.x_min - tol
            && other.x_max <= self.x_max + tol
            && other.y_min >= self.y_min - tol
            && other.y_max <= self.y_max + tol
    }

    /// Largest absolute per-side difference to `other`, in pixels.
    pub fn max_side_distance(&self, other: &Rect) -> f64 {
        (self.x_min - other.x_min)
            .abs()
            .max((self.x_max - other.x_max).abs())
            .max((self.y_min - other.y_min).abs())
            .max((self.y_max - other.y_max).abs())
    }
}

/// A projected box: the 8 corner pixels (in corner order) and their tight
/// enclosing rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedBox {
    pub corners: [PixelPoint; 8],
    pub rect: Rect,
}

/// The 8 object-frame corners of a box, in the contract order described in
/// the module docs.
pub fn corners_local(dims: BoxDims) -> [Vector3<f64>; 8] {
    let sign = |bit: usize, k: usize| if k >> bit & 1 == 0 { 1.0 } else { -1.0 };
    std::array::from_fn(|k| {
        Vector3::new(
            sign(0, k) * dims.dx / 2.0,
            sign(1, k) * dims.dy / 2.0,
            sign(2, k) * dims.dz / 2.0,
        )
    })
}

/// Proper rotation about the camera y-axis (KITTI `rotation_y` convention).
pub fn rotation_from_yaw(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Projects an object-frame point through `pose` and `k` onto the image.
pub fn project_point(
    k: &CameraIntrinsics,
    pose: &Pose,
    x_obj: &Vector3<f64>,
) -> Result<PixelPoint, GeometryError> {
    let xc = pose.rotation() * x_obj + pose.translation();
    let w = xc.z + k.translation[2];
    if w <= 0.0 {
        return Err(GeometryError::PointBehindCamera { depth: w });
    }
    let u = (k.fx * xc.x + k.cx * xc.z + k.translation[0]) / w;
    let v = (k.fy * xc.y + k.cy * xc.z + k.translation[1]) / w;
    Ok(PixelPoint { u, v })
}

/// Projects all 8 corners of a box and returns them with their tight
/// enclosing rectangle. Fails if any corner lands behind the camera.
pub fn project_box(
    k: &CameraIntrinsics,
    pose: &Pose,
    dims: BoxDims,
) -> Result<ProjectedBox, GeometryError> {
    let local = corners_local(dims);
    let mut corners = [PixelPoint { u: 0.0, v: 0.0 }; 8];
    for (out, x) in corners.iter_mut().zip(local.iter()) {
        *out = project_point(k, pose, x)?;
    }
    let rect = Rect {
        x_min: corners.iter().map(|p| p.u).fold(f64::INFINITY, f64::min),
        y_min: corners.iter().map(|p| p.v).fold(f64::INFINITY, f64::min),
        x_max: corners
            .iter()
            .map(|p| p.u)
            .fold(f64::NEG_INFINITY, f64::max),
        y_max: corners
            .iter()
            .map(|p| p.v)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(ProjectedBox { corners, rect })
}

/// Horizontal angle of the viewing ray through image column `u`.
pub fn ray_angle(k: &CameraIntrinsics, u: f64) -> f64 {
    (u - k.cx).atan2(k.fx)
}

/// Global yaw from a ray-relative (local) angle: `θ = θ_ray + θ_l`.
pub fn global_from_local(theta_local: f64, theta_ray: f64) -> f64 {
    wrap_angle(theta_local + theta_ray)
}

/// Ray-relative (local) angle from a global yaw: `θ_l = θ - θ_ray`.
pub fn local_from_global(theta_global: f64, theta_ray: f64) -> f64 {
    wrap_angle(theta_global - theta_ray)
}
