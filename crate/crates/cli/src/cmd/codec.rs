//! `monolift encode` / `monolift decode`: the orientation head's scalar
//! form, one angle at a time. `decode(encode(theta))` reproduces `theta` to
//! floating-point precision, which makes the pair handy for sanity checks
//! and for building prediction files by hand.

use clap::Args;

use monolift::config::RunConfig;
use monolift::multibin::{decode as decode_head, MultiBinOutput};

use super::CliError;

#[derive(Args)]
pub struct EncodeArgs {
    /// Local (viewing-ray-relative) orientation angle in radians, [-pi, pi].
    /// Negative angles need a `--` separator: `monolift encode -- -2.35`.
    #[arg(allow_hyphen_values = true, value_name = "THETA")]
    theta: f64,
}

#[derive(Args)]
pub struct DecodeArgs {
    /// Bin-head scalars as (score, cos, sin) triples in bin order; count
    /// must be 3x the configured bin count.
    #[arg(num_args = 1.., allow_hyphen_values = true, value_name = "SCALAR")]
    scalars: Vec<f64>,
}

pub fn encode(args: &EncodeArgs, config: &RunConfig) -> Result<(), CliError> {
    if !args.theta.is_finite() || args.theta.abs() > std::f64::consts::PI + 1e-9 {
        return Err(CliError::Input(format!(
            "theta {} is not an angle in [-pi, pi]",
            args.theta
        )));
    }
    let layout = config.layout().map_err(CliError::input)?;
    let head = MultiBinOutput::ideal(&layout, args.theta);
    let line = head
        .to_scalars()
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!("{line}");
    Ok(())
}

pub fn decode(args: &DecodeArgs, config: &RunConfig) -> Result<(), CliError> {
    let layout = config.layout().map_err(CliError::input)?;
    if args.scalars.len() != 3 * layout.n {
        return Err(CliError::Input(format!(
            "expected {} scalars for {} bins, got {}",
            3 * layout.n,
            layout.n,
            args.scalars.len()
        )));
    }
    let head = MultiBinOutput::from_scalars(&args.scalars).map_err(CliError::input)?;
    let theta = decode_head(&head, &layout).map_err(CliError::input)?;
    println!("{theta}");
    Ok(())
}
