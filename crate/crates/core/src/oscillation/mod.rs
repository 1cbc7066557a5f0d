//! Oscillation decay machinery: parabolic cylinders, tail integrals, the
//! three-piece velocity split, flow-following recentering, the
//! rescale/recenter iteration and Hölder seminorm estimates.
//!
//! Fields in rescaled frames are evaluated lazily through
//! [`SpaceTimeField`]; each frame maps points and times into its parent, so
//! the chain bottoms out in a spectral history evaluated exactly per mode.

mod cylinder;
mod field;
mod flow;
mod holder;
mod kernel;
pub mod suite;
mod tail;

pub use cylinder::{oscillation, sampled_extremes, sampled_oscillation, CylinderLattice, ParabolicCylinder};
pub use field::{FnField, Normalized, Rescaled, SpaceTimeField, SpectralHistory};
pub use flow::{recenter_flow, RecenterPath, FLOW_STEPS};
pub use holder::holder_estimate;
pub use kernel::{
    admissible_field, calibrate_split_constant, split_velocity, PointSampler, PolarRule, SlowVelocity,
    SplitCalibration, VelocitySplit, KERNEL_CONSTANT, SPLIT_CONSTANT,
};
pub use suite::{run_iteration_suite, IterationConfig, IterationReport, OscillationRecord};
pub use tail::{calibrate_tail_constant, tail_estimates, tail_integral, TailEstimate, TailIntegral};

use thiserror::Error;

use crate::solver::SolverError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OscillationError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cylinder time interval [{needed_from}, {needed_to}] not covered by history [{have_from}, {have_to}]")]
    NotCovered {
        needed_from: f64,
        needed_to: f64,
        have_from: f64,
        have_to: f64,
    },
    #[error("radius {radius} resolved by {points:.1} grid points across, need at least 8")]
    Unresolved { radius: f64, points: f64 },
    #[error("domain half-width {half_width} too small around the unit ball")]
    DomainTooSmall { half_width: f64 },
    #[error("ρ = {0} must lie in (0, 1)")]
    InvalidRho(f64),
    #[error("minimum separation {min_sep} below two grid spacings ({spacing})")]
    SeparationTooSmall { min_sep: f64, spacing: f64 },
    #[error("empty history")]
    EmptyHistory,
    #[error("invalid iteration configuration: {0}")]
    InvalidConfig(String),
    #[error("velocity evaluator returned a non-finite value at t = {0}")]
    EvaluatorFailure(f64),
}
