//! `monolift eval`: score predicted label files against ground truth.

use std::path::PathBuf;

use clap::Args;

use monolift::config::RunConfig;
use monolift::metrics::evaluate_dirs;

use super::CliError;

#[derive(Args)]
pub struct EvalArgs {
    /// Ground-truth label directory.
    #[arg(long, value_name = "DIR")]
    gt_dir: PathBuf,

    /// Predicted label directory (rows must carry scores).
    #[arg(long, value_name = "DIR")]
    pred_dir: PathBuf,

    /// Also write the machine-readable table here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

pub fn run(args: &EvalArgs, config: &RunConfig) -> Result<(), CliError> {
    let report = evaluate_dirs(&args.gt_dir, &args.pred_dir, &config.eval_config())
        .map_err(CliError::input)?;
    print!("{report}");
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv())
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
