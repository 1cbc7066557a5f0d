use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, SpectralError};

/// Real values of θ on the grid nodes at a given simulation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite { index });
        }
        if !time.is_finite() {
            return Err(SpectralError::NonFiniteTime(time));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time,
        }
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn([f64; 2]) -> f64) -> Result<Self, SpectralError> {
        Self::new(grid, grid.sample(f), time)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Torus integral by the (spectrally exact) rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing().powi(2)
    }

    /// L² norm on the torus.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.spacing().powi(2)).sqrt()
    }

    /// Pointwise map producing a field on the same grid and time.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect(), self.time)
    }

    /// Linear combination `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.grid, values, self.time)
    }

    /// Cyclic shift by whole grid cells.
    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let n = self.grid.n();
        let mut values = vec![0.0; self.values.len()];
        for j in 0..n {
            for i in 0..n {
                values[self.grid.index((i + di) % n, (j + dj) % n)] = self.values[self.grid.index(i, j)];
            }
        }
        Self {
            grid: self.grid,
            values,
            time: self.time,
        }
    }
}

/// Fourier coefficients of a real field in FFT layout, normalised so that
/// the zero mode is the field mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coefficients.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                found: coefficients.len(),
            });
        }
        Ok(Self { grid, coefficients })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coefficients: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    #[inline]
    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.coefficients[self.grid.index(i, j)]
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.coefficients[0].re
    }

    /// Largest violation of `ĉ(−k) = conj(ĉ(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                let a = self.at(i, j);
                let b = self.at((n - i) % n, (n - j) % n);
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

/// Velocity `w = (u, v)` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    grid: Grid,
    u: Vec<f64>,
    v: Vec<f64>,
    time: f64,
}

impl VelocityField {
    pub fn new(grid: Grid, u: Vec<f64>, v: Vec<f64>, time: f64) -> Result<Self, SpectralError> {
        for comp in [&u, &v] {
            if comp.len() != grid.len() {
                return Err(SpectralError::LengthMismatch {
                    expected: grid.len(),
                    found: comp.len(),
                });
            }
        }
        Ok(Self { grid, u, v, time })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    #[inline]
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        let k = self.grid.index(i, j);
        [self.u[k], self.v[k]]
    }

    pub fn max_speed(&self) -> f64 {
        self.u.iter().zip(&self.v).fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }
}
