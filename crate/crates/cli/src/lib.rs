//! Scenario runner for the `tactics-core` evaluators and optimizers.
//!
//! A scenario is a TOML file naming a `kind` and carrying a section of the
//! same name; see the README for the grammar. [`run_file`] parses, validates
//! and runs one scenario and writes its CSV, plot data and manifest.

pub mod config;
pub mod examples;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::Scenario;
pub use runner::{run, RunReport};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "TACTICS_LAB_THREADS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            s.out_dir = dir.clone();
        }
    }
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Scenario::parse(&text, &path.display().to_string())
}

pub fn run_file(path: &Path, o: &Overrides) -> Result<RunReport, CliError> {
    let mut s = load(path)?;
    o.apply(&mut s);
    run(&s)
}

/// Parses the thread cap; `None` leaves rayon's default.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV}: expected a positive integer, got `{v}`"
            ))),
        },
    }
}
