//! Angle normalization.
//!
//! Every angle in this crate lives in `[-π, π)`. All wrapping goes through
//! [`wrap_angle`] so the tie rule at the boundary is applied uniformly.

use std::f64::consts::{PI, TAU};

/// Wraps an angle to `[-π, π)`. Exactly `±π` maps to `-π`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid can land on TAU through rounding when x is slightly below a
    // wrap boundary, which would return exactly +π.
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Absolute angular distance between two angles, in `[0, π]`.
#[inline]
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}
