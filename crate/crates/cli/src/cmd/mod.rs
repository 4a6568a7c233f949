//! Subcommand implementations and the error-to-exit-code split.

pub mod codec;
pub mod eval;
pub mod lift;
pub mod render;
pub mod synth;

use std::path::Path;

use monolift::config::RunConfig;

/// Errors split by whose fault they are: `Input` exits 1, `Internal` (a
/// violated invariant of our own) exits 2.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Loads the configuration file, or the defaults when none is given.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p).map_err(CliError::input),
        None => Ok(RunConfig::default()),
    }
}

/// Builds a rayon pool with the requested width (0 = one thread per core).
pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Writes to a file, or stdout when no path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, content).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
