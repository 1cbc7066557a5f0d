//! Weighted Dirichlet energy `∫∫ z^ε |∇(η θ)|² dx dz` of a cut-off
//! extension.

use serde::{Deserialize, Serialize};

use super::{ExtensionError, ExtensionField};
use crate::spectral::ScalarField;

/// z-dependence of a separable cutoff `η(x, z) = η_h(x) η_v(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VerticalProfile {
    Constant,
    /// `exp(1 − 1/(1 − (z/support)²))` on `[0, support)`, zero above; equal
    /// to 1 with zero slope at `z = 0`.
    Bump {
        support: f64,
    },
}

impl VerticalProfile {
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            VerticalProfile::Constant => 1.0,
            VerticalProfile::Bump { support } => {
                let r = z / support;
                if r >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - r * r)).exp()
                }
            }
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            VerticalProfile::Constant => 0.0,
            VerticalProfile::Bump { support } => {
                let r = z / support;
                if r >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - r * r;
                    self.value(z) * (-2.0 * r / (q * q)) / support
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub horizontal: ScalarField,
    pub vertical: VerticalProfile,
}

impl Cutoff {
    /// `η ≡ 1`.
    pub fn full(grid: crate::spectral::Grid) -> Self {
        Self {
            horizontal: ScalarField::from_fn(grid, 0.0, |_| 1.0).expect("finite"),
            vertical: VerticalProfile::Constant,
        }
    }

    /// Centered-difference gradient of the horizontal factor.
    pub fn horizontal_gradient(&self) -> (Vec<f64>, Vec<f64>) {
        let grid = self.horizontal.grid();
        let n = grid.n();
        let h2 = 2.0 * grid.spacing();
        let mut gx = vec![0.0; grid.len()];
        let mut gy = vec![0.0; grid.len()];
        for j in 0..n {
            for i in 0..n {
                let f = |a: usize, b: usize| self.horizontal.at(a % n, b % n);
                gx[grid.index(i, j)] = (f(i + 1, j) - f(i + n - 1, j)) / h2;
                gy[grid.index(i, j)] = (f(i, j + 1) - f(i, j + n - 1)) / h2;
            }
        }
        (gx, gy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    /// `|I_h − I_{2h}|` from the trapezoid rule on every other level.
    pub error_estimate: f64,
}

/// Per-level densities `∫ (z^ε ∂_z f)² + z^{2ε} |∇ₓ f|² dx` for `f = η θ`.
pub(crate) fn level_densities(ext: &ExtensionField, cutoff: &Cutoff) -> Result<Vec<f64>, ExtensionError> {
    let grid = *ext.grid();
    let eps = ext.epsilon();
    let cell = grid.spacing().powi(2);
    let eta = cutoff.horizontal.values();
    let (ex, ey) = cutoff.horizontal_gradient();
    let mut out = Vec::with_capacity(ext.z_levels().len());
    for (l, &z) in ext.z_levels().iter().enumerate() {
        let (v, dv) = (cutoff.vertical.value(z), cutoff.vertical.derivative(z));
        if v == 0.0 && dv == 0.0 {
            out.push(0.0);
            continue;
        }
        let theta = ext.level(l);
        let dz = ext.weighted_z_derivative(z)?;
        let (tx, ty) = ext.horizontal_gradient(z)?;
        let zeps = if z > 0.0 {
            z.powf(eps)
        } else if eps == 0.0 {
            1.0
        } else {
            0.0
        };
        let mut acc = 0.0;
        for k in 0..grid.len() {
            let fz = eta[k] * (dv * zeps * theta[k] + v * dz.values()[k]);
            let fx = v * (ex[k] * theta[k] + eta[k] * tx.values()[k]);
            let fy = v * (ey[k] * theta[k] + eta[k] * ty.values()[k]);
            acc += fz * fz + zeps * zeps * (fx * fx + fy * fy);
        }
        out.push(acc * cell);
    }
    Ok(out)
}

fn trapezoid(u: &[f64], f: &[f64]) -> f64 {
    u.windows(2)
        .zip(f.windows(2))
        .map(|(u, f)| 0.5 * (u[1] - u[0]) * (f[0] + f[1]))
        .sum()
}

/// Trapezoid quadrature in `u = z^{1−ε}/(1−ε)` over the extension levels,
/// where both terms of the integrand are bounded up to `z = 0`.
pub fn weighted_dirichlet_energy(ext: &ExtensionField, cutoff: &Cutoff) -> Result<EnergyEstimate, ExtensionError> {
    if cutoff.horizontal.grid() != ext.grid() {
        return Err(crate::spectral::SpectralError::GridMismatch.into());
    }
    let eps = ext.epsilon();
    let dens = level_densities(ext, cutoff)?;
    let u: Vec<f64> = ext.z_levels().iter().map(|z| z.powf(1.0 - eps) / (1.0 - eps)).collect();
    let value = trapezoid(&u, &dens);
    let error_estimate = if u.len() >= 3 {
        let u2: Vec<f64> = u.iter().step_by(2).copied().collect();
        let d2: Vec<f64> = dens.iter().step_by(2).copied().collect();
        // Cover an odd tail interval with the fine rule.
        let mut coarse = trapezoid(&u2, &d2);
        if u.len().is_multiple_of(2) {
            let m = u.len();
            coarse += 0.5 * (u[m - 1] - u[m - 2]) * (dens[m - 1] + dens[m - 2]);
        }
        (value - coarse).abs()
    } else {
        value.abs()
    };
    Ok(EnergyEstimate { value, error_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{dtn_constant, extend};
    use crate::spectral::{sobolev_norm, Grid};

    fn u_levels(eps: f64, z_top: f64, count: usize) -> Vec<f64> {
        let u_top = z_top.powf(1.0 - eps) / (1.0 - eps);
        (0..=count)
            .map(|k| ((k as f64 / count as f64) * u_top * (1.0 - eps)).powf(1.0 / (1.0 - eps)))
            .collect()
    }

    #[test]
    fn full_space_energy_matches_sobolev_norm() {
        let grid = Grid::periodic(32).unwrap();
        let theta = ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap();
        for eps in [0.0, 0.1] {
            let ext = extend(&theta, &u_levels(eps, 25.0, 800), eps).unwrap();
            let e = weighted_dirichlet_energy(&ext, &Cutoff::full(grid)).unwrap();
            let expect = dtn_constant(eps) * sobolev_norm(&theta, (1.0 - eps) / 2.0).unwrap().powi(2);
            assert!(
                (e.value / expect - 1.0).abs() < 0.02,
                "ε = {eps}: {} vs {expect}",
                e.value
            );
            assert!(e.error_estimate < 0.02 * expect);
        }
    }

    #[test]
    fn zero_field_and_quadratic_scaling() {
        let grid = Grid::periodic(16).unwrap();
        let z = u_levels(0.1, 5.0, 50);
        let zero = extend(&ScalarField::zeros(grid, 0.0), &z, 0.1).unwrap();
        assert_eq!(
            weighted_dirichlet_energy(&zero, &Cutoff::full(grid)).unwrap().value,
            0.0
        );
        let theta = ScalarField::from_fn(grid, 0.0, |x| (x[0] + 2.0 * x[1]).cos()).unwrap();
        let cutoff = Cutoff {
            horizontal: ScalarField::from_fn(grid, 0.0, |x| (-(x[0] - 3.0).powi(2) - (x[1] - 3.0).powi(2)).exp())
                .unwrap(),
            vertical: VerticalProfile::Bump { support: 2.0 },
        };
        let e1 = weighted_dirichlet_energy(&extend(&theta, &z, 0.1).unwrap(), &cutoff)
            .unwrap()
            .value;
        let e2 = weighted_dirichlet_energy(&extend(&theta.map(|v| 2.0 * v).unwrap(), &z, 0.1).unwrap(), &cutoff)
            .unwrap()
            .value;
        assert!((e2 / e1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bump_profile_is_smooth_at_ends() {
        let b = VerticalProfile::Bump { support: 2.0 };
        assert_eq!(b.value(0.0), 1.0);
        assert_eq!(b.derivative(0.0), 0.0);
        assert_eq!(b.value(2.0), 0.0);
        let h = 1e-6;
        let fd = (b.value(1.0 + h) - b.value(1.0 - h)) / (2.0 * h);
        assert!((fd - b.derivative(1.0)).abs() < 1e-8);
    }
}
