//! Deterministic SVG wireframe rendering of boxes over the image plane.
//!
//! Each box contributes its 12 edges plus a diagonal cross on the forward
//! face so the heading is visible at a glance. Boxes with any corner at or
//! behind the camera plane are skipped with a warning — a clipped wireframe
//! would silently misrepresent the pose being inspected.

use crate::geometry::{project_box, Box3D, CameraIntrinsics, GeometryError};

use std::fmt::Write as _;

/// Canvas geometry and stroke width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub width: f64,
    pub height: f64,
    pub stroke_width: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 1242.0,
            height: 375.0,
            stroke_width: 1.5,
        }
    }
}

/// Fixed per-class stroke colors; unknown classes share a neutral grey.
pub fn class_color(class: &str) -> &'static str {
    match class {
        "Car" | "Van" | "Truck" => "#e53935",
        "Pedestrian" | "Person_sitting" => "#1e88e5",
        "Cyclist" => "#43a047",
        _ => "#757575",
    }
}

/// Renders boxes as an SVG document string. Input order is preserved, so
/// equal inputs produce byte-identical output. Returns the document and the
/// number of boxes actually drawn.
pub fn render_svg(
    k: &CameraIntrinsics,
    boxes: &[(Box3D, String)],
    opts: &RenderOptions,
) -> (String, usize) {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.0} {:.0}">"#,
        opts.width, opts.height
    );
    let _ = writeln!(
        svg,
        r##"  <rect x="0" y="0" width="{:.0}" height="{:.0}" fill="#101418"/>"##,
        opts.width, opts.height
    );
    let mut drawn = 0;
    for (idx, (box3d, class)) in boxes.iter().enumerate() {
        match box_lines(k, box3d) {
            Ok(lines) => {
                let _ = writeln!(
                    svg,
                    r#"  <g stroke="{}" stroke-width="{}" fill="none" stroke-linecap="round">"#,
                    class_color(class),
                    opts.stroke_width
                );
                for [x0, y0, x1, y1] in lines {
                    let _ = writeln!(
                        svg,
                        r#"    <line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}"/>"#
                    );
                }
                let _ = writeln!(svg, "  </g>");
                drawn += 1;
            }
            Err(GeometryError::PointBehindCamera { depth }) => {
                log::warn!(
                    "box {idx} ({class}): corner at depth {depth:.3} m is behind the camera; skipped"
                );
            }
            Err(err) => {
                log::warn!("box {idx} ({class}): {err}; skipped");
            }
        }
    }
    let _ = writeln!(svg, "</svg>");
    (svg, drawn)
}

/// The 14 stroke segments of one box: 12 edges plus the forward-face cross.
/// Corner indexing puts the sign of axis `i` on bit `i`, so edges connect
/// indices differing in exactly one bit and the forward face is the four
/// even indices.
fn box_lines(k: &CameraIntrinsics, box3d: &Box3D) -> Result<Vec<[f64; 4]>, GeometryError> {
    let projected = project_box(k, &box3d.pose, box3d.dims)?;
    let px: Vec<[f64; 2]> = projected.corners.iter().map(|p| [p.u, p.v]).collect();
    let mut lines = Vec::with_capacity(14);
    for i in 0..8usize {
        for bit in [1usize, 2, 4] {
            let j = i ^ bit;
            if i < j {
                lines.push([px[i][0], px[i][1], px[j][0], px[j][1]]);
            }
        }
    }
    // forward face (+x half, bit 0 clear): diagonals 0-6 and 2-4
    lines.push([px[0][0], px[0][1], px[6][0], px[6][1]]);
    lines.push([px[2][0], px[2][1], px[4][0], px[4][1]]);
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoxDims, Pose};

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(721.5377, 721.5377, 621.0, 187.5).unwrap()
    }

    fn car_at(t: [f64; 3]) -> (Box3D, String) {
        (
            Box3D {
                pose: Pose::from_yaw_t(0.4, t),
                dims: BoxDims::from_hwl(1.52, 1.63, 3.88).unwrap(),
            },
            "Car".to_string(),
        )
    }

    #[test]
    fn one_box_is_fourteen_strokes() {
        let (svg, drawn) = render_svg(&camera(), &[car_at([0.0, 0.8, 15.0])], &Default::default());
        assert_eq!(drawn, 1);
        assert_eq!(svg.matches("<line ").count(), 14);
        assert_eq!(svg.matches("<g ").count(), 1);
        assert!(svg.contains("#e53935"));
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn output_is_deterministic() {
        let boxes = vec![car_at([0.0, 0.8, 15.0]), car_at([-4.0, 0.8, 30.0])];
        let a = render_svg(&camera(), &boxes, &Default::default());
        let b = render_svg(&camera(), &boxes, &Default::default());
        assert_eq!(a, b);
    }

    #[test]
    fn behind_camera_boxes_are_skipped_not_clipped() {
        let boxes = vec![car_at([0.0, 0.8, 15.0]), car_at([0.0, 0.8, -5.0])];
        let (svg, drawn) = render_svg(&camera(), &boxes, &Default::default());
        assert_eq!(drawn, 1);
        assert_eq!(svg.matches("<g ").count(), 1);
        // a box straddling the camera plane must also go
        let straddling = vec![car_at([0.0, 0.8, 1.0])];
        let (_, drawn) = render_svg(&camera(), &straddling, &Default::default());
        assert_eq!(drawn, 0);
    }

    #[test]
    fn classes_map_to_their_fixed_colors() {
        assert_eq!(class_color("Car"), "#e53935");
        assert_eq!(class_color("Pedestrian"), "#1e88e5");
        assert_eq!(class_color("Cyclist"), "#43a047");
        assert_eq!(class_color("SomethingElse"), "#757575");
    }
}
