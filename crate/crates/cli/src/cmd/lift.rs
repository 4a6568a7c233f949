//! `monolift lift`: prediction file + calibrations in, per-frame 3D label
//! files out.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use monolift::config::RunConfig;
use monolift::geometry::{ray_angle, BoxDims};
use monolift::kitti::{
    emit_label_file, read_calib_dir, read_predictions, FrameId, KittiLabel, OrientationSpec,
    PredictionRecord,
};
use monolift::lifting::{lift_with_options, ConfigMode, LiftOptions};
use monolift::multibin::{decode, make_layout};
use monolift::wrap_angle;

use super::CliError;

#[derive(Args)]
pub struct LiftArgs {
    /// Prediction interchange file (header plus one detection per line).
    #[arg(long, value_name = "FILE")]
    predictions: PathBuf,

    /// Directory of per-frame calibration files.
    #[arg(long, value_name = "DIR")]
    calib_dir: PathBuf,

    /// Output directory for per-frame label files (created if missing).
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,

    /// Corner-assignment search space; overrides the configuration file.
    #[arg(long, value_enum)]
    mode: Option<CliMode>,

    /// Drop window sides that lie on the image border before solving;
    /// overrides the configuration file.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    drop_truncated_sides: Option<bool>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliMode {
    Pruned,
    Exhaustive,
}

pub fn run(args: &LiftArgs, config: &RunConfig, jobs: usize) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.predictions)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.predictions.display())))?;
    let file = read_predictions(&text).map_err(CliError::input)?;
    // The file header owns the bin count; the configuration contributes the
    // overlap factor (and everything else).
    if file.n_bins != config.bins.n {
        log::info!(
            "prediction header has n={} bins; configuration says {} — the file wins",
            file.n_bins,
            config.bins.n
        );
    }
    let layout = make_layout(file.n_bins, config.bins.overlap).map_err(CliError::input)?;
    let calibs = read_calib_dir(&args.calib_dir).map_err(CliError::input)?;

    let mut by_frame: BTreeMap<FrameId, Vec<PredictionRecord>> = BTreeMap::new();
    for record in file.records {
        by_frame.entry(record.frame).or_default().push(record);
    }
    for frame in by_frame.keys() {
        if !calibs.contains_key(frame) {
            return Err(CliError::Input(format!(
                "frame {frame} has predictions but no calibration file"
            )));
        }
    }

    let mut opts = config.lift_options(args.drop_truncated_sides);
    if let Some(mode) = args.mode {
        opts.mode = match mode {
            CliMode::Pruned => ConfigMode::Pruned,
            CliMode::Exhaustive => ConfigMode::Exhaustive,
        };
    }

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out_dir.display())))?;

    let pool = super::thread_pool(jobs)?;
    let frames: Vec<(&FrameId, &Vec<PredictionRecord>)> = by_frame.iter().collect();
    let results: Vec<(FrameId, Vec<KittiLabel>, usize)> = pool.install(|| {
        frames
            .par_iter()
            .map(|(frame, records)| {
                let k = calibs[frame].intrinsics().map_err(CliError::input)?;
                let mut labels = Vec::with_capacity(records.len());
                let mut skipped = 0usize;
                for r in records.iter() {
                    match lift_record(r, &k, config, &layout, &opts) {
                        Ok(label) => labels.push(label),
                        Err(reason) => {
                            skipped += 1;
                            log::warn!("frame {frame}: detection not lifted: {reason}");
                        }
                    }
                }
                Ok((**frame, labels, skipped))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;

    let mut total = 0usize;
    let mut skipped = 0usize;
    for (frame, labels, frame_skipped) in &results {
        total += labels.len();
        skipped += frame_skipped;
        let path = args.out_dir.join(format!("{frame}.txt"));
        std::fs::write(&path, emit_label_file(labels))
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    eprintln!(
        "lifted {total} detection(s) across {} frame(s) into {} ({skipped} skipped)",
        results.len(),
        args.out_dir.display()
    );
    Ok(())
}

/// Lifts one detection: decode the local angle, attach the viewing ray,
/// pick dimensions, solve, and format the resulting label row.
fn lift_record(
    r: &PredictionRecord,
    k: &monolift::CameraIntrinsics,
    config: &RunConfig,
    layout: &monolift::BinLayout,
    opts: &LiftOptions,
) -> Result<KittiLabel, String> {
    let theta_local = match &r.orientation {
        OrientationSpec::MultiBin(head) => decode(head, layout).map_err(|e| e.to_string())?,
        OrientationSpec::Local(theta) => *theta,
    };
    let yaw = wrap_angle(theta_local + ray_angle(k, r.det.center_u()));
    let dims = match r.dims_hwl {
        Some([h, w, l]) => BoxDims::from_hwl(h, w, l).map_err(|e| e.to_string())?,
        None => config
            .priors
            .lookup(&r.det.class_label)
            .map_err(|e| e.to_string())?,
    };
    let result = lift_with_options(k, yaw, dims, &r.det, opts).map_err(|e| e.to_string())?;
    let box3d = monolift::Box3D {
        pose: result.pose,
        dims: result.dims,
    };
    Ok(KittiLabel::from_box3d(
        &r.det.class_label,
        &box3d,
        r.det.rect(),
        k,
        r.det.score,
    ))
}
