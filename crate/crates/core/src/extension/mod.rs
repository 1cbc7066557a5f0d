//! Weighted extension of θ to the half space `z > 0`, solving
//! `div(z^ε ∇θ) = 0` with `θ(·, 0)` given, its weighted Neumann trace and
//! the weighted Dirichlet energy.
//!
//! The extension factorises per Fourier mode: `θ̂ₖ(z) = θ̂ₖ φ_ε(|k| z)` with
//! the profile of [`Profile`].

mod bessel;
pub mod energy;
mod profile;
pub mod trace;

pub use bessel::{bessel_k, scaled_bessel_k};
pub use energy::{weighted_dirichlet_energy, Cutoff, EnergyEstimate, VerticalProfile};
pub use profile::{dtn_constant, Profile};
pub use trace::{
    calibrate_dtn, dtn_check, neumann_trace, neumann_trace_with, spectral_bandwidth, DtnCalibration, DtnCheck,
    DTN_TOLERANCE, MAX_TRACE_LEVELS, TRACE_RESOLUTION_FACTOR,
};

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

use crate::spectral::{forward_transform, inverse_transform, Grid, ScalarField, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("weight exponent {0} outside [0, 1)")]
    InvalidEpsilon(f64),
    #[error("invalid z levels: {0}")]
    InvalidLevels(String),
    #[error("need at least {needed} z levels in (0, {z_max:e}], found {found}")]
    InsufficientResolution { needed: usize, found: usize, z_max: f64 },
}

/// θ(x, z) on the base grid at each z level, with the source spectrum kept
/// so that z-derivatives can be taken exactly per mode.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    grid: Grid,
    z_levels: Vec<f64>,
    values: Vec<f64>,
    epsilon: f64,
    source: SpectralField,
    time: f64,
}

/// Apply `g(|k|)` to every mode of `spec`, evaluating `g` once per distinct
/// `|m|²` of the integer wavevector.
fn radial_multiplier(spec: &SpectralField, g: impl Fn(f64) -> f64) -> SpectralField {
    let grid = *spec.grid();
    let n = grid.n();
    let base = grid.base_wavenumber();
    let mut cache: HashMap<i64, f64> = HashMap::new();
    let mut out = spec.clone();
    for j in 0..n {
        for i in 0..n {
            let idx = grid.index(i, j);
            let c = spec.coefficients()[idx];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (a, b) = (grid.signed_index(i), grid.signed_index(j));
            let m2 = a * a + b * b;
            let factor = *cache.entry(m2).or_insert_with(|| g(base * (m2 as f64).sqrt()));
            out.coefficients_mut()[idx] = c * factor;
        }
    }
    out
}

fn validate_levels(z_levels: &[f64]) -> Result<(), ExtensionError> {
    match z_levels.first() {
        None => return Err(ExtensionError::InvalidLevels("no levels".into())),
        Some(&z0) if z0 != 0.0 => return Err(ExtensionError::InvalidLevels("first level must be z = 0".into())),
        _ => {}
    }
    if z_levels.iter().any(|z| !z.is_finite()) || z_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExtensionError::InvalidLevels(
            "levels must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Extend θ to the given z levels. The zero mode is constant in z.
pub fn extend(theta: &ScalarField, z_levels: &[f64], epsilon: f64) -> Result<ExtensionField, ExtensionError> {
    let profile = Profile::new(epsilon)?;
    validate_levels(z_levels)?;
    let grid = *theta.grid();
    let source = forward_transform(theta)?;
    let levels: Vec<Vec<f64>> = z_levels
        .par_iter()
        .map(|&z| {
            if z == 0.0 {
                return Ok(theta.values().to_vec());
            }
            let spec = radial_multiplier(&source, |k| if k == 0.0 { 1.0 } else { profile.value(k * z) });
            Ok(inverse_transform(&spec, theta.time())?.into_values())
        })
        .collect::<Result<_, ExtensionError>>()?;
    Ok(ExtensionField {
        grid,
        z_levels: z_levels.to_vec(),
        values: levels.concat(),
        epsilon,
        source,
        time: theta.time(),
    })
}

impl ExtensionField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn z_levels(&self) -> &[f64] {
        &self.z_levels
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn source(&self) -> &SpectralField {
        &self.source
    }

    /// Values at level `l`, row-major.
    pub fn level(&self, l: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[l * len..(l + 1) * len]
    }

    pub fn level_field(&self, l: usize) -> ScalarField {
        ScalarField::new(self.grid, self.level(l).to_vec(), self.time).expect("extension values are finite")
    }

    /// `max_z max_x |θ(x, z)|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `z^ε ∂_z θ` at height `z`, exact per mode; `z = 0` gives the limit.
    pub fn weighted_z_derivative(&self, z: f64) -> Result<ScalarField, ExtensionError> {
        let profile = Profile::new(self.epsilon)?;
        let eps = self.epsilon;
        // z^ε ∂_z φ(|k| z) = |k|^{1−ε} (s^ε φ'(s)) at s = |k| z.
        let spec = radial_multiplier(&self.source, |k| {
            if k == 0.0 {
                0.0
            } else {
                k.powf(1.0 - eps) * profile.weighted_derivative(k * z)
            }
        });
        Ok(inverse_transform(&spec, self.time)?)
    }

    /// Horizontal gradient at height `z`, exact per mode.
    pub fn horizontal_gradient(&self, z: f64) -> Result<(ScalarField, ScalarField), ExtensionError> {
        let profile = Profile::new(self.epsilon)?;
        let at_z = radial_multiplier(&self.source, |k| if k == 0.0 { 1.0 } else { profile.value(k * z) });
        let grid = self.grid;
        let deriv = |axis: usize| {
            crate::spectral::apply_multiplier(&at_z, |i, j| {
                if grid.is_nyquist(i, j) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.wavevector(i, j)[axis])
                }
            })
        };
        Ok((
            inverse_transform(&deriv(0), self.time)?,
            inverse_transform(&deriv(1), self.time)?,
        ))
    }

    /// Values at an arbitrary height, exact per mode.
    pub fn at_height(&self, z: f64) -> Result<ScalarField, ExtensionError> {
        let profile = Profile::new(self.epsilon)?;
        let spec = radial_multiplier(&self.source, |k| if k == 0.0 { 1.0 } else { profile.value(k * z) });
        Ok(inverse_transform(&spec, self.time)?)
    }
}

/// `[0, z_max/2^{count−1}, …, z_max/2, z_max]`: zero followed by a
/// geometric ladder of ratio 2.
pub fn geometric_ladder(z_max: f64, count: usize) -> Vec<f64> {
    let mut z = vec![0.0];
    z.extend((0..count).rev().map(|p| z_max / 2f64.powi(p as i32)));
    z
}
