//! Numerical checks of the weighted isoperimetric lemma and of the local
//! energy inequality for truncated extensions.

pub mod isoperimetric;
pub mod local_energy;
mod measure;
mod sample;

pub use isoperimetric::{
    calibrate_isoperimetric, calibrate_on, constants_by_radius, isoperimetric_check, random_family,
    IsoperimetricCalibration, IsoperimetricResult,
};
pub use local_energy::{
    calibrate_local_energy, extend_history, local_energy_check, local_energy_terms, u_uniform_levels, LocalCutoff,
    LocalEnergyReport, LocalEnergyTerms,
};
pub use measure::{weighted_measure, HalfBall, LevelSet, MeasureEstimate, WeightedRegion};
pub use sample::{GriddedHalfBall, TrigPolynomial};

use thiserror::Error;

use crate::extension::ExtensionError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeGiorgiError {
    #[error("Monte Carlo sample count must be positive")]
    ZeroSamples,
    #[error("weight exponent {0} outside [0, 1)")]
    InvalidEpsilon(f64),
    #[error("function sampled on B_{sampled}* but region B_{requested}* requested")]
    RegionMismatch { sampled: f64, requested: f64 },
    #[error("history and velocity time grids differ: {0}")]
    TimeGridMismatch(String),
    #[error("invalid time window [{t1}, {t2}]")]
    InvalidWindow { t1: f64, t2: f64 },
    #[error("cutoff support {support} not inside B_2*")]
    CutoffSupport { support: f64 },
    #[error("empty calibration family")]
    EmptyFamily,
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
