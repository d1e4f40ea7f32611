//! Configuration, result tables and the commands behind the `vegpattern` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::Path;

pub use commands::{run, Command, Output};
pub use config::RunConfig;
pub use error::CliError;

/// Runs `cmd` on a pool of `cfg.workers` threads and writes its files into `out_dir`.
/// Returns whether some cells were unresolved.
pub fn execute(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> Result<bool, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    let output = pool.install(|| run(cmd, cfg))?;
    std::fs::create_dir_all(out_dir)?;
    for (name, artifact) in &output.files {
        std::fs::write(out_dir.join(name), artifact.render())?;
    }
    Ok(output.partial)
}
