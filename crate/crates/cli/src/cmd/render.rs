//! `monolift render`: draw a label file's boxes over the image plane.

use std::path::PathBuf;

use clap::Args;

use monolift::geometry::Box3D;
use monolift::kitti::{parse_calib_file, parse_label_file};
use monolift::render::{render_svg, RenderOptions};

use super::CliError;

#[derive(Args)]
pub struct RenderArgs {
    /// Calibration file for the frame.
    #[arg(long, value_name = "FILE")]
    calib: PathBuf,

    /// Label file to draw (ground truth or lifted output).
    #[arg(long, value_name = "FILE")]
    labels: PathBuf,

    /// Output SVG path; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Canvas width in pixels.
    #[arg(long, default_value_t = 1242.0)]
    width: f64,

    /// Canvas height in pixels.
    #[arg(long, default_value_t = 375.0)]
    height: f64,
}

pub fn run(args: &RenderArgs) -> Result<(), CliError> {
    let calib_text = std::fs::read_to_string(&args.calib)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.calib.display())))?;
    let label_text = std::fs::read_to_string(&args.labels)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.labels.display())))?;
    let k = parse_calib_file(&calib_text)
        .map_err(CliError::input)?
        .intrinsics()
        .map_err(CliError::input)?;
    let labels = parse_label_file(&label_text).map_err(CliError::input)?;

    let boxes: Vec<(Box3D, String)> = labels
        .iter()
        .filter_map(|l| Some((l.box3d()?, l.class_label.clone())))
        .collect();
    let opts = RenderOptions {
        width: args.width,
        height: args.height,
        ..Default::default()
    };
    let (svg, drawn) = render_svg(&k, &boxes, &opts);
    eprintln!("drew {drawn} of {} box(es)", boxes.len());
    super::write_output(args.output.as_deref(), &svg)
}
