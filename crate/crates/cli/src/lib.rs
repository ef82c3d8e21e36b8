//! Command-line front end: `check`, `synth`, `scenario`, `plan` and
//! `generate`. Exit codes: 0 satisfied (or completed), 1 violated, 2 error.

pub mod args;
pub mod commands;
pub mod error;
pub mod generate;

pub use args::Cli;
pub use commands::{run, Instance, Sensor, EXIT_ERROR, EXIT_OK, EXIT_VIOLATED};
pub use error::{CliError, Result};

/// Cap the global rayon pool from `VERISYNTH_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("VERISYNTH_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| error::usage(format!("VERISYNTH_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| error::usage(e.to_string()))
}
