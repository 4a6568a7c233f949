//! Browser bindings for the interactive playground page in `www/`.
//!
//! Compiled to WebAssembly this exposes three operations to plain JavaScript:
//! recovering a 3D box from a 2D window ([`lift_scene`]), inspecting the
//! binned orientation representation ([`orientation_head`]), and comparing
//! two boxes in bird's-eye view ([`bev_overlap`]). Requests and responses are
//! JSON strings so the page needs no generated binding types beyond the
//! standard module glue; failures come back as an `{"error": "..."}` object
//! instead of a thrown exception, which keeps the page's event handlers
//! trivial.
//!
//! The crate also builds as a plain Rust library so the JSON contract is
//! covered by the native test suite.

use monolift::geometry::{global_from_local, ray_angle};
use monolift::lifting::{lift, ConfigMode, Detection2D};
use monolift::metrics::{bev_intersection_area, iou3d};
use monolift::multibin::{decode, encode, loss_conf, loss_loc, loss_total, make_layout};
use monolift::render::{render_svg, RenderOptions};
use monolift::{wrap_angle, Box3D, BoxDims, CameraIntrinsics, LossWeights, MultiBinOutput, Pose};
use serde::Deserialize;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

fn error_json(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

/// One 3D box recovery: camera, detection window, ray-relative orientation
/// and dimensions in, recovered pose plus an SVG overlay out.
#[derive(Deserialize)]
struct LiftRequest {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    image_width: f64,
    image_height: f64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    /// Ray-relative (what an orientation head regresses), degrees.
    theta_local_deg: f64,
    /// Height, width, length in meters, matching label order.
    h: f64,
    w: f64,
    l: f64,
}

/// Recovers the 3D box whose projection fits the given window tightest and
/// renders it over the image plane.
///
/// Returns `{t, depth_m, yaw_deg, theta_ray_deg, residual_px, svg}` or
/// `{error}`.
#[wasm_bindgen]
pub fn lift_scene(request: &str) -> String {
    let req: LiftRequest = match serde_json::from_str(request) {
        Ok(req) => req,
        Err(e) => return error_json(format!("bad request: {e}")),
    };
    let k = match CameraIntrinsics::new(req.fx, req.fy, req.cx, req.cy) {
        Ok(k) => k,
        Err(e) => return error_json(e),
    };
    let dims = match BoxDims::from_hwl(req.h, req.w, req.l) {
        Ok(d) => d,
        Err(e) => return error_json(e),
    };
    let det = match Detection2D::new(req.x_min, req.y_min, req.x_max, req.y_max, "Car", 1.0) {
        Ok(d) => d,
        Err(e) => return error_json(e),
    };

    let theta_ray = ray_angle(&k, det.center_u());
    let yaw = global_from_local(req.theta_local_deg.to_radians(), theta_ray);
    let res = match lift(&k, yaw, dims, &det, ConfigMode::Pruned) {
        Ok(res) => res,
        Err(e) => return error_json(e),
    };

    let recovered = Box3D::new(res.pose, res.dims);
    let opts = RenderOptions {
        width: req.image_width,
        height: req.image_height,
        stroke_width: 2.0,
    };
    let (svg, _) = render_svg(&k, &[(recovered, "Car".to_owned())], &opts);
    // Overlay the detection window itself so the tight fit is visible.
    let window = format!(
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#fdd835" stroke-width="1.5" stroke-dasharray="7 5"/>"##,
        req.x_min,
        req.y_min,
        req.x_max - req.x_min,
        req.y_max - req.y_min,
    );
    let svg = svg.replace("</svg>", &format!("{window}\n</svg>"));

    json!({
        "t": res.pose.t,
        "depth_m": res.pose.t[2],
        "yaw_deg": res.pose.orientation.theta.to_degrees(),
        "theta_ray_deg": theta_ray.to_degrees(),
        "residual_px": res.residual,
        "svg": svg,
    })
    .to_string()
}

/// Encodes an angle against an overlapping-bin layout and decodes it back.
///
/// Returns the layout (`centers_deg`, `half_width_deg`), the ground-truth
/// coverage and per-bin residuals, the exactly-decoding head output, the
/// decoded angle, and the loss values an ideal and a uniform-confidence head
/// would incur; or `{error}`.
#[wasm_bindgen]
pub fn orientation_head(theta_deg: f64, n: usize, overlap: f64) -> String {
    if !theta_deg.is_finite() {
        return error_json("angle must be finite");
    }
    let layout = match make_layout(n, overlap) {
        Ok(l) => l,
        Err(e) => return error_json(e),
    };
    let theta = wrap_angle(theta_deg.to_radians());
    let target = encode(theta, &layout);
    let ideal = MultiBinOutput::ideal(&layout, theta);
    let decoded = match decode(&ideal, &layout) {
        Ok(d) => d,
        Err(e) => return error_json(e),
    };

    let uniform_scores = vec![0.0; layout.n];
    let weights = LossWeights::default();
    let losses = json!({
        "ideal_conf": loss_conf(&ideal.scores, &target).ok(),
        "ideal_loc": loss_loc(&ideal, &target, &layout).ok(),
        "ideal_total": loss_total(&ideal, &target, &layout, &weights).ok(),
        "uniform_conf": loss_conf(&uniform_scores, &target).ok(),
        "w": weights.w,
    });

    let centers_deg: Vec<f64> = layout.centers.iter().map(|c| c.to_degrees()).collect();
    let residuals_deg: Vec<f64> = layout
        .centers
        .iter()
        .map(|&c| wrap_angle(theta - c).to_degrees())
        .collect();
    json!({
        "theta_deg": theta.to_degrees(),
        "centers_deg": centers_deg,
        "half_width_deg": layout.half_width.to_degrees(),
        "covered": target.covered,
        "residuals_deg": residuals_deg,
        "scores": ideal.scores,
        "decoded_deg": decoded.to_degrees(),
        "decode_error_deg": wrap_angle(decoded - theta).to_degrees(),
        "losses": losses,
    })
    .to_string()
}

/// One upright box seen from above, plus its vertical extent.
#[derive(Deserialize)]
struct BevBox {
    x: f64,
    /// Vertical center; positive is downward, matching the camera frame.
    #[serde(default)]
    y: f64,
    z: f64,
    yaw_deg: f64,
    h: f64,
    w: f64,
    l: f64,
}

#[derive(Deserialize)]
struct BevRequest {
    a: BevBox,
    b: BevBox,
}

fn build_box(spec: &BevBox) -> Result<Box3D, String> {
    let dims = BoxDims::from_hwl(spec.h, spec.w, spec.l).map_err(|e| e.to_string())?;
    Ok(Box3D::new(
        Pose::from_yaw_t(spec.yaw_deg.to_radians(), [spec.x, spec.y, spec.z]),
        dims,
    ))
}

/// Exact volumetric and bird's-eye overlap of two upright boxes.
///
/// Returns `{iou3d, bev_iou, bev_intersection_m2, a_poly, b_poly, a_y, b_y}`
/// where the polygons are ground-plane corner loops; or `{error}`.
#[wasm_bindgen]
pub fn bev_overlap(request: &str) -> String {
    let req: BevRequest = match serde_json::from_str(request) {
        Ok(req) => req,
        Err(e) => return error_json(format!("bad request: {e}")),
    };
    let a = match build_box(&req.a) {
        Ok(b) => b,
        Err(e) => return error_json(e),
    };
    let b = match build_box(&req.b) {
        Ok(b) => b,
        Err(e) => return error_json(e),
    };

    let inter = bev_intersection_area(&a, &b);
    let area = |bx: &Box3D| bx.dims.dx * bx.dims.dz;
    let bev_union = area(&a) + area(&b) - inter;
    let bev_iou = if bev_union > 0.0 {
        (inter / bev_union).clamp(0.0, 1.0)
    } else {
        0.0
    };

    json!({
        "iou3d": iou3d(&a, &b),
        "bev_iou": bev_iou,
        "bev_intersection_m2": inter,
        "a_poly": a.bev_corners(),
        "b_poly": b.bev_corners(),
        "a_y": a.y_interval(),
        "b_y": b.y_interval(),
    })
    .to_string()
}
