//! Periodic-grid Fourier infrastructure: transforms, the fractional
//! Laplacian Λ^s, Riesz transforms and the SQG velocity, homogeneous Sobolev
//! norms and 2/3-rule dealiasing.
//!
//! Normalisation: `θ(x) = Σₖ θ̂ₖ e^{ik·x}`, so the zero mode is the mean and
//! `‖θ‖²_{L²} = L² Σₖ |θ̂ₖ|²` on a torus of side `L`.
//!
//! The Riesz transform is `R_j θ(x) = c PV ∫ (y_j − x_j) θ(y) / |y − x|³ dy`
//! with `c = 1/(2π)`, whose symbol is `+i k_j / |k|`; the sign is pinned by a
//! quadrature test against this kernel.

mod fft;
mod field;
mod grid;
mod interp;

pub use fft::Fft2d;
pub use field::{ScalarField, SpectralField, VelocityField};
pub use grid::Grid;
pub use interp::PointEvaluator;

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Kernel constant `c` in `R_j θ(x) = c PV ∫ (y_j − x_j) θ(y) / |y − x|³ dy`.
pub const RIESZ_KERNEL_CONSTANT: f64 = 1.0 / (2.0 * PI);

/// Relative size of the zero mode tolerated by operations that require a
/// mean-zero field; it is removed silently below this threshold.
pub const MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size {0} is not a power of two >= 4")]
    InvalidGridSize(usize),
    #[error("side length {0} must be positive and finite")]
    InvalidSideLength(f64),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("non-finite time stamp {0}")]
    NonFiniteTime(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("fractional order {0} outside (0, 2)")]
    InvalidOrder(f64),
    #[error("field mean {mean:e} exceeds the mean-zero tolerance {tolerance:e}")]
    NotMeanZero { mean: f64, tolerance: f64 },
}

pub fn forward_transform(field: &ScalarField) -> Result<SpectralField, SpectralError> {
    if let Some(index) = field.values().iter().position(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite { index });
    }
    let grid = *field.grid();
    let mut data: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2d::cached(grid.n()).forward(&mut data);
    SpectralField::new(grid, data)
}

/// Real part of the inverse transform, stamped with `time`.
pub fn inverse_transform(spec: &SpectralField, time: f64) -> Result<ScalarField, SpectralError> {
    let grid = *spec.grid();
    let mut data = spec.coefficients().to_vec();
    Fft2d::cached(grid.n()).inverse(&mut data);
    ScalarField::new(grid, data.into_iter().map(|c| c.re).collect(), time)
}

/// Multiply every mode by `symbol(i, j)`.
pub fn apply_multiplier(spec: &SpectralField, symbol: impl Fn(usize, usize) -> Complex64) -> SpectralField {
    let grid = *spec.grid();
    let n = grid.n();
    let mut out = spec.clone();
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            out.coefficients_mut()[k] *= symbol(i, j);
        }
    }
    out
}

/// Fails unless the zero mode is below `MEAN_TOLERANCE` relative to
/// `scale`; on success the zero mode is set to exactly zero.
pub fn remove_mean(spec: &mut SpectralField, scale: f64) -> Result<(), SpectralError> {
    let mean = spec.coefficients()[0].norm();
    let tolerance = MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if mean > tolerance {
        return Err(SpectralError::NotMeanZero { mean, tolerance });
    }
    spec.coefficients_mut()[0] = Complex64::new(0.0, 0.0);
    Ok(())
}

fn mean_zero_spectrum(field: &ScalarField) -> Result<SpectralField, SpectralError> {
    let mut spec = forward_transform(field)?;
    remove_mean(&mut spec, field.max_abs())?;
    Ok(spec)
}

/// `Λ^order θ` with multiplier `|k|^order`; the zero mode maps to 0.
pub fn fractional_laplacian(field: &ScalarField, order: f64) -> Result<ScalarField, SpectralError> {
    if !(order > 0.0 && order < 2.0) {
        return Err(SpectralError::InvalidOrder(order));
    }
    let spec = forward_transform(field)?;
    let out = fractional_laplacian_spectral(&spec, order);
    inverse_transform(&out, field.time())
}

/// `|k|^order` multiplier on coefficients; no range check on `order`.
pub fn fractional_laplacian_spectral(spec: &SpectralField, order: f64) -> SpectralField {
    let grid = *spec.grid();
    apply_multiplier(spec, |i, j| {
        let [k1, k2] = grid.wavevector(i, j);
        let k = k1.hypot(k2);
        if k == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(k.powf(order), 0.0)
        }
    })
}

/// Symbol `i k_axis / |k|` of the Riesz transform `R_axis` (axis 0 or 1),
/// zero on the zero mode and the Nyquist lines.
#[inline]
pub fn riesz_symbol(grid: &Grid, i: usize, j: usize, axis: usize) -> Complex64 {
    if (i == 0 && j == 0) || grid.is_nyquist(i, j) {
        return Complex64::new(0.0, 0.0);
    }
    let k = grid.wavevector(i, j);
    Complex64::new(0.0, k[axis] / k[0].hypot(k[1]))
}

/// Velocity coefficients `(ŵ₁, ŵ₂) = (−R̂₂θ̂, R̂₁θ̂)`.
pub fn riesz_velocity_spectral(spec: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = *spec.grid();
    let u = apply_multiplier(spec, |i, j| -riesz_symbol(&grid, i, j, 1));
    let v = apply_multiplier(spec, |i, j| riesz_symbol(&grid, i, j, 0));
    (u, v)
}

/// SQG velocity `w = R^⊥θ = (−R₂θ, R₁θ)`.
pub fn riesz_velocity(field: &ScalarField) -> Result<VelocityField, SpectralError> {
    let spec = mean_zero_spectrum(field)?;
    let (u, v) = riesz_velocity_spectral(&spec);
    let u = inverse_transform(&u, field.time())?;
    let v = inverse_transform(&v, field.time())?;
    VelocityField::new(*field.grid(), u.into_values(), v.into_values(), field.time())
}

/// Single Riesz transform `R_axis θ` of a mean-zero field.
pub fn riesz_transform(field: &ScalarField, axis: usize) -> Result<ScalarField, SpectralError> {
    let spec = mean_zero_spectrum(field)?;
    let grid = *field.grid();
    let out = apply_multiplier(&spec, |i, j| riesz_symbol(&grid, i, j, axis));
    inverse_transform(&out, field.time())
}

/// Homogeneous Sobolev norm `(L² Σ |θ̂ₖ|² |k|^{2·order})^{1/2}`.
pub fn sobolev_norm(field: &ScalarField, order: f64) -> Result<f64, SpectralError> {
    let spec = mean_zero_spectrum(field)?;
    Ok(sobolev_norm_spectral(&spec, order))
}

/// Sobolev norm from coefficients; the zero mode is ignored.
pub fn sobolev_norm_spectral(spec: &SpectralField, order: f64) -> f64 {
    sobolev_norm_squared_spectral(spec, order).sqrt()
}

pub fn sobolev_norm_squared_spectral(spec: &SpectralField, order: f64) -> f64 {
    let grid = spec.grid();
    let n = grid.n();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let [k1, k2] = grid.wavevector(i, j);
            let k2sum = k1 * k1 + k2 * k2;
            sum += spec.at(i, j).norm_sqr() * k2sum.powf(order);
        }
    }
    sum * grid.area()
}

/// 2/3-rule truncation: zero every mode with a wavenumber component above
/// `n/3`.
pub fn dealias(spec: &SpectralField) -> SpectralField {
    let grid = *spec.grid();
    let cutoff = grid.dealias_cutoff();
    apply_multiplier(spec, |i, j| {
        if grid.signed_index(i).abs() > cutoff || grid.signed_index(j).abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Spectral gradient `(∂₁θ, ∂₂θ)`.
pub fn gradient(field: &ScalarField) -> Result<(ScalarField, ScalarField), SpectralError> {
    let spec = forward_transform(field)?;
    let grid = *field.grid();
    let d = |axis: usize| {
        apply_multiplier(&spec, |i, j| {
            if grid.is_nyquist(i, j) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavevector(i, j)[axis])
            }
        })
    };
    Ok((
        inverse_transform(&d(0), field.time())?,
        inverse_transform(&d(1), field.time())?,
    ))
}

/// Spectral divergence `∂₁u + ∂₂v`.
pub fn divergence(w: &VelocityField) -> Result<ScalarField, SpectralError> {
    let grid = *w.grid();
    let u = forward_transform(&ScalarField::new(grid, w.u().to_vec(), w.time())?)?;
    let v = forward_transform(&ScalarField::new(grid, w.v().to_vec(), w.time())?)?;
    let mut out = SpectralField::zeros(grid);
    let n = grid.n();
    for j in 0..n {
        for i in 0..n {
            if grid.is_nyquist(i, j) {
                continue;
            }
            let [k1, k2] = grid.wavevector(i, j);
            let k = grid.index(i, j);
            out.coefficients_mut()[k] =
                Complex64::new(0.0, k1) * u.coefficients()[k] + Complex64::new(0.0, k2) * v.coefficients()[k];
        }
    }
    inverse_transform(&out, w.time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mean_zero(grid: Grid, seed: u64, k_max: i64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        let mut spec = SpectralField::zeros(grid);
        for j in 0..n {
            for i in 0..n {
                let (a, b) = (grid.signed_index(i), grid.signed_index(j));
                if (a, b) != (0, 0) && a.abs() <= k_max && b.abs() <= k_max {
                    spec.coefficients_mut()[grid.index(i, j)] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        inverse_transform(&spec, 0.0).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let grid = Grid::periodic(16).unwrap();
        let f = ScalarField::from_fn(grid, 0.0, |_| 2.5).unwrap();
        let s = forward_transform(&f).unwrap();
        assert!((s.coefficients()[0] - Complex64::new(2.5, 0.0)).norm() < 1e-14);
        assert!(s.coefficients()[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn sine_has_two_modes() {
        let grid = Grid::periodic(32).unwrap();
        let f = ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap();
        let s = forward_transform(&f).unwrap();
        let plus = grid.index(1, 0);
        let minus = grid.index(31, 0);
        assert!((s.coefficients()[plus] - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((s.coefficients()[minus] - Complex64::new(0.0, 0.5)).norm() < 1e-14);
        let others = s
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != plus && *k != minus)
            .fold(0.0_f64, |m, (_, c)| m.max(c.norm()));
        assert!(others < 1e-14);
    }

    #[test]
    fn round_trip_random() {
        let grid = Grid::periodic(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(), 0.0).unwrap();
        let back = inverse_transform(&forward_transform(&f).unwrap(), 0.0).unwrap();
        let err = max_diff(&f, &back) / f.max_abs();
        assert!(err <= 1e-12, "round trip error {err}");
    }

    #[test]
    fn non_finite_rejected() {
        let grid = Grid::periodic(8).unwrap();
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert_eq!(
            ScalarField::new(grid, v, 0.0),
            Err(SpectralError::NonFinite { index: 5 })
        );
    }

    #[test]
    fn fractional_laplacian_examples() {
        let grid = Grid::periodic(32).unwrap();
        let c1 = ScalarField::from_fn(grid, 0.0, |x| x[0].cos()).unwrap();
        for order in [0.3, 1.0, 1.7] {
            assert!(max_diff(&fractional_laplacian(&c1, order).unwrap(), &c1) < 1e-13);
        }
        let konst = ScalarField::from_fn(grid, 0.0, |_| 3.0).unwrap();
        assert!(fractional_laplacian(&konst, 0.5).unwrap().max_abs() < 1e-13);
        let c2 = ScalarField::from_fn(grid, 0.0, |x| (2.0 * x[0]).cos()).unwrap();
        let expect = c2.map(|v| 2f64.sqrt() * v).unwrap();
        assert!(max_diff(&fractional_laplacian(&c2, 0.5).unwrap(), &expect) < 1e-13);
        assert_eq!(fractional_laplacian(&c2, 2.0), Err(SpectralError::InvalidOrder(2.0)));
        assert_eq!(fractional_laplacian(&c2, 0.0), Err(SpectralError::InvalidOrder(0.0)));
    }

    #[test]
    fn riesz_velocity_of_sine_and_zero() {
        let grid = Grid::periodic(32).unwrap();
        let s = ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap();
        let w = riesz_velocity(&s).unwrap();
        let cos = ScalarField::from_fn(grid, 0.0, |x| x[0].cos()).unwrap();
        assert!(w.u().iter().all(|u| u.abs() < 1e-14));
        assert!(w.v().iter().zip(cos.values()).all(|(a, b)| (a - b).abs() < 1e-13));
        let z = riesz_velocity(&ScalarField::zeros(grid, 0.0)).unwrap();
        assert_eq!(z.max_speed(), 0.0);
    }

    /// Lattice sum of `c (y − x)₁ θ(y) / |y − x|³` over the periodic cell
    /// centred at `x`, skipping the singular node.
    fn kernel_quadrature(field: &ScalarField, i0: usize, j0: usize) -> f64 {
        let grid = field.grid();
        let n = grid.n();
        let h = grid.spacing();
        let x = grid.coordinates(i0, j0);
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i == i0 && j == j0 {
                    continue;
                }
                let d = grid.min_image(grid.coordinates(i, j), x);
                let r = d[0].hypot(d[1]);
                acc += d[0] * field.at(i, j) / (r * r * r);
            }
        }
        RIESZ_KERNEL_CONSTANT * acc * h * h
    }

    #[test]
    fn riesz_sign_matches_kernel_quadrature() {
        let grid = Grid::periodic(512).unwrap();
        let theta = ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap();
        let r1 = riesz_transform(&theta, 0).unwrap();
        // On the truncated cell [−π, π)² the odd part of sin(x₁ + d₁) gives
        // cos(x₁)·T, with T = ∫_{−π}^{π} sin d / (d √(d² + π²)) dd from the
        // y₂ integral of |d|⁻³.
        let m = 20_000;
        let hs = 2.0 * PI / m as f64;
        let g = |d: f64| {
            if d == 0.0 {
                1.0 / PI
            } else {
                d.sin() / (d * (d * d + PI * PI).sqrt())
            }
        };
        let t: f64 = (0..=m)
            .map(|s| {
                let d = -PI + s as f64 * hs;
                let w = if s == 0 || s == m {
                    1.0
                } else if s % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * g(d)
            })
            .sum::<f64>()
            * hs
            / 3.0;
        for (i0, j0) in [(0, 0), (40, 100), (200, 7)] {
            let quad = kernel_quadrature(&theta, i0, j0);
            let spectral = r1.at(i0, j0);
            let x1 = grid.coordinates(i0, j0)[0];
            assert!((spectral - x1.cos()).abs() < 1e-12);
            assert!(quad * spectral > 0.0, "orientation mismatch at ({i0},{j0})");
            assert!(
                (quad - x1.cos() * t).abs() < 0.02 * x1.cos().abs().max(0.1),
                "quad {quad} vs {}",
                x1.cos() * t
            );
        }
    }

    #[test]
    fn riesz_rejects_nonzero_mean() {
        let grid = Grid::periodic(16).unwrap();
        let f = ScalarField::from_fn(grid, 0.0, |x| 1.0 + x[0].sin()).unwrap();
        assert!(matches!(riesz_velocity(&f), Err(SpectralError::NotMeanZero { .. })));
    }

    #[test]
    fn velocity_is_divergence_free() {
        let grid = Grid::periodic(64).unwrap();
        let f = random_mean_zero(grid, 3, 30);
        let f = f.map(|v| v / f.max_abs()).unwrap();
        let w = riesz_velocity(&f).unwrap();
        let div = divergence(&w).unwrap();
        assert!(div.max_abs() <= 1e-13, "divergence {}", div.max_abs());
    }

    #[test]
    fn sobolev_norm_examples() {
        let grid = Grid::periodic(32).unwrap();
        let s = ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap();
        // Direct quadrature of ∫ sin² over the torus.
        let quad = (s.values().iter().map(|v| v * v).sum::<f64>() * grid.spacing().powi(2)).sqrt();
        let expect = (2.0 * PI * PI).sqrt();
        assert!((quad - expect).abs() < 1e-12);
        for order in [0.0, 0.5, 1.3] {
            assert!((sobolev_norm(&s, order).unwrap() - expect).abs() < 1e-12);
        }
        assert_eq!(sobolev_norm(&ScalarField::zeros(grid, 0.0), 0.7).unwrap(), 0.0);
    }

    #[test]
    fn dealias_examples() {
        let grid = Grid::periodic(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let full = ScalarField::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(), 0.0).unwrap();
        let spec = forward_transform(&full).unwrap();
        let cut = dealias(&spec);
        // Index-set oracle: the retained set is exactly |m₁|, |m₂| ≤ 10.
        for j in 0..32 {
            for i in 0..32 {
                let keep = grid.signed_index(i).abs() <= 10 && grid.signed_index(j).abs() <= 10;
                let c = cut.at(i, j);
                if keep {
                    assert_eq!(c, spec.at(i, j));
                } else {
                    assert_eq!(c, Complex64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(dealias(&cut), cut);
        let zero = SpectralField::zeros(grid);
        assert_eq!(dealias(&zero), zero);
    }
}
