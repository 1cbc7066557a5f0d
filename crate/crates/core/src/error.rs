use thiserror::Error;

use crate::constants::ConstantsError;
use crate::degiorgi::DeGiorgiError;
use crate::extension::ExtensionError;
use crate::harness::HarnessError;
use crate::oscillation::OscillationError;
use crate::solver::{CheckpointError, SolverError};
use crate::spectral::SpectralError;

/// Crate-wide error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    DeGiorgi(#[from] DeGiorgiError),
    #[error(transparent)]
    Oscillation(#[from] OscillationError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
