//! Command-line front end for designing adaptive decoupling sequences and
//! simulating NV sensor spectra.

pub mod analysis;
pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] axy_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for bad input, 3 for unsolvable timing targets, 4 for capacity.
    pub fn exit_code(&self) -> i32 {
        use axy_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Core(E::Range { .. } | E::Infeasible { .. }) => 3,
            Self::Core(E::Capacity(_)) => 4,
            Self::Core(
                E::Domain(_) | E::InvalidTimings(_) | E::Schedule(_) | E::Mode(_) | E::Grid(_) | E::Singular(_),
            ) => 2,
            Self::Core(E::DegenerateFrame | E::DegenerateFit(_)) => 1,
            Self::Io { .. } => 1,
        }
    }
}

pub(crate) fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
