//! Run configuration, orchestration and reporting.
//!
//! [`simulate`] evolves the configured initial condition, writes binary
//! checkpoints and then calls [`diagnose`], which fans the snapshot series
//! out to the enabled diagnostics and collects one report section and one
//! or more pass/fail checks per diagnostic.

mod config;
mod initial;
mod run;

pub use config::{Diagnostic, InitialCondition, RunConfig};
pub use initial::{initial_field, random_band_limited};
pub use run::{
    checkpoint_paths, diagnose, energy_levels, load_checkpoints, simulate, CheckOutcome, CheckStatus, EnergySection,
    RunReport, Simulation, TailSection, Timing, TAIL_CALIBRATION_TIME,
};

use std::path::PathBuf;
use thiserror::Error;

use crate::degiorgi::DeGiorgiError;
use crate::extension::ExtensionError;
use crate::oscillation::OscillationError;
use crate::solver::{CheckpointError, SolverError};
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint {}", path.display())]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
    #[error("checkpoint series: {0}")]
    InconsistentSeries(String),
    #[error("run aborted")]
    Aborted {
        /// Report on the snapshots written before the failure.
        report: Box<RunReport>,
        #[source]
        source: SolverError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    DeGiorgi(#[from] DeGiorgiError),
    #[error(transparent)]
    Oscillation(#[from] OscillationError),
}
