//! Command-line front end for `steinweiss-core`.
//!
//! Every run reads one JSON config, writes a `manifest.json` with the
//! effective config, seed, worker count and results into its output
//! directory, and exits with 0 on success, 2 on a validation failure, 3 on
//! a tolerance breach and 4 on non-convergence.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{run, Command, RunRequest};
pub use error::{CliError, CliResult};
pub use manifest::{ResultManifest, Status};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global
/// pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
