//! Volumetric overlap between yawed upright boxes.
//!
//! Both boxes are axis-aligned vertically, so the 3D intersection factors
//! into (ground-plane polygon overlap) x (vertical interval overlap). The
//! ground-plane part clips one box footprint against the other with the
//! classic convex polygon-against-convex-window sweep.

use crate::geometry::Box3D;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Signed area of a polygon via the shoelace sum; positive when the vertex
/// loop runs counter-clockwise.
fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Clips a convex polygon against one half-plane: keep points on the left of
/// the directed edge a->b (the inside of a CCW window).
fn clip_against_edge(poly: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (sc, sn) = (side(cur), side(next));
        if sc >= 0.0 {
            out.push(cur);
        }
        // Edge crosses the boundary: add the intersection point. Touching
        // endpoints (side exactly 0) were already kept above.
        if (sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0) {
            let t = sc / (sc - sn);
            out.push([
                cur[0] + t * (next[0] - cur[0]),
                cur[1] + t * (next[1] - cur[1]),
            ]);
        }
    }
    out
}

/// Area of the intersection of two convex CCW polygons.
fn convex_intersection_area(subject: &[[f64; 2]], window: &[[f64; 2]]) -> f64 {
    let mut poly: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..window.len() {
        if poly.len() < 3 {
            return 0.0;
        }
        poly = clip_against_edge(&poly, window[i], window[(i + 1) % window.len()]);
    }
    signed_area(&poly).max(0.0)
}

/// Ground-plane (bird's-eye) overlap area of two boxes.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    convex_intersection_area(&a.bev_corners(), &b.bev_corners())
}

/// Intersection-over-union of two upright boxes' volumes, in `[0, 1]`.
/// Degenerate unions report 0.
pub fn iou3d(a: &Box3D, b: &Box3D) -> f64 {
    let base = bev_intersection_area(a, b);
    let (a_lo, a_hi) = a.y_interval();
    let (b_lo, b_hi) = b.y_interval();
    let height = (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0.0);
    let inter = base * height;
    let union = a.dims.volume() + b.dims.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Brute-force IoU estimate by uniform sampling over the pair's joint
/// bounding volume. This is the independent check for [`iou3d`] — a
/// different algorithm with different failure modes — and deliberately does
/// no polygon arithmetic.
pub fn monte_carlo_iou3d(a: &Box3D, b: &Box3D, samples: u32, seed: u64) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for bx in [a, b] {
        let (y0, y1) = bx.y_interval();
        for [x, z] in bx.bev_corners() {
            lo[0] = lo[0].min(x);
            hi[0] = hi[0].max(x);
            lo[2] = lo[2].min(z);
            hi[2] = hi[2].max(z);
        }
        lo[1] = lo[1].min(y0);
        hi[1] = hi[1].max(y1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut in_union, mut in_both) = (0u64, 0u64);
    for _ in 0..samples {
        let p = [
            rng.gen_range(lo[0]..hi[0]),
            rng.gen_range(lo[1]..hi[1]),
            rng.gen_range(lo[2]..hi[2]),
        ];
        let hit_a = contains_point(a, p);
        let hit_b = contains_point(b, p);
        if hit_a || hit_b {
            in_union += 1;
        }
        if hit_a && hit_b {
            in_both += 1;
        }
    }
    if in_union == 0 {
        return 0.0;
    }
    in_both as f64 / in_union as f64
}

/// Point membership in object coordinates: undo yaw, compare to half-extents.
fn contains_point(b: &Box3D, p: [f64; 3]) -> bool {
    let (s, c) = b.pose.orientation.theta.sin_cos();
    let dx = p[0] - b.pose.t[0];
    let dy = p[1] - b.pose.t[1];
    let dz = p[2] - b.pose.t[2];
    // inverse of the yaw rotation applied in bev_corners
    let local_x = dx * c - dz * s;
    let local_z = dx * s + dz * c;
    local_x.abs() <= b.dims.dx / 2.0
        && dy.abs() <= b.dims.dy / 2.0
        && local_z.abs() <= b.dims.dz / 2.0
}
