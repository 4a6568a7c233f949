//! `monolift` — recover 3D boxes from 2D detections, evaluate them, and
//! poke at the orientation encoding from a shell.
//!
//! Exit codes: 0 on success, 1 for input problems (unreadable or malformed
//! files, invalid configuration, missing frames), 2 for internal invariant
//! failures (a bug, not your data).

mod cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::CliError;

#[derive(Parser)]
#[command(name = "monolift", version, about = "Monocular 3D box lifting toolkit")]
struct Cli {
    /// TOML run configuration; omitted fields keep their defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for batch commands (0 = one per core). Overrides the
    /// configuration file.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a prediction file to per-frame 3D label files.
    Lift(cmd::lift::LiftArgs),
    /// Evaluate predicted label files against ground truth.
    Eval(cmd::eval::EvalArgs),
    /// Run the seeded synthetic noise sweep and print its summary table.
    Synth(cmd::synth::SynthArgs),
    /// Encode a local orientation angle into bin-head scalars.
    Encode(cmd::codec::EncodeArgs),
    /// Decode bin-head scalars back into a local orientation angle.
    Decode(cmd::codec::DecodeArgs),
    /// Render label files as an SVG wireframe overlay.
    Render(cmd::render::RenderArgs),
}

fn main() -> ExitCode {
    // Die quietly if stdout closes early (`monolift eval | head`), like any
    // well-behaved pipeline stage, instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match cmd::load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let jobs = cli.jobs.unwrap_or(config.jobs);
    let result = std::panic::catch_unwind(|| match cli.command {
        Command::Lift(args) => cmd::lift::run(&args, &config, jobs),
        Command::Eval(args) => cmd::eval::run(&args, &config),
        Command::Synth(args) => cmd::synth::run(&args, &config, jobs),
        Command::Encode(args) => cmd::codec::encode(&args, &config),
        Command::Decode(args) => cmd::codec::decode(&args, &config),
        Command::Render(args) => cmd::render::run(&args),
    });
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => fail(e),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Input(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        CliError::Internal(msg) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
