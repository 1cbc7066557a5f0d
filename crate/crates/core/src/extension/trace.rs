//! Weighted Neumann trace `lim_{z→0} z^ε ∂_z θ` by generalised Richardson
//! extrapolation.
//!
//! Per mode, `φ_ε(s) − 1 = A s^{1−ε} + B s² + C s^{3−ε} + D s⁴ + …`, so the
//! difference quotient `q(z) = (θ(z) − θ(0)) / z^{1−ε}` is a series in the
//! exponents `0, 1+ε, 2, 3+ε, 4, …` and the trace is `(1 − ε)·q(0)`.
//! Fitting that series through the levels of a geometric ladder recovers
//! `q(0)` without ever differentiating across the weight singularity.

use serde::{Deserialize, Serialize};

use super::{dtn_constant, extend, geometric_ladder, ExtensionError, ExtensionField};
use crate::spectral::{forward_transform, fractional_laplacian, Grid, ScalarField, SpectralField};

/// Levels used for the limit must satisfy `z ≤ TRACE_RESOLUTION_FACTOR / k_eff`.
pub const TRACE_RESOLUTION_FACTOR: f64 = 0.1;
pub const MIN_TRACE_LEVELS: usize = 4;
pub const MAX_TRACE_LEVELS: usize = 6;

fn effective_bandwidth(ext: &ExtensionField) -> f64 {
    spectral_bandwidth(ext.source())
}

/// Largest `|k|` carrying a coefficient above `1e-12` of the peak.
pub fn spectral_bandwidth(spec: &SpectralField) -> f64 {
    let grid = spec.grid();
    let n = grid.n();
    let peak = spec.coefficients().iter().skip(1).fold(0.0_f64, |m, c| m.max(c.norm()));
    let mut k_eff = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            if (i, j) == (0, 0) {
                continue;
            }
            if spec.at(i, j).norm() > 1e-12 * peak {
                let [a, b] = grid.wavevector(i, j);
                k_eff = k_eff.max(a.hypot(b));
            }
        }
    }
    k_eff
}

/// Solve the dense system `a x = b` by Gaussian elimination with partial
/// pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, below) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (offset, r) in below.iter_mut().enumerate() {
            let f = r[col] / pivot[col];
            for (x, p) in r[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[col + 1 + offset] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Weights `w` with `q(0) ≈ Σ w_l q(z_l)` for the known exponent series.
fn extrapolation_weights(z: &[f64], epsilon: f64) -> Vec<f64> {
    let m = z.len();
    let exps: Vec<f64> = (0..m)
        .map(|j| if j % 2 == 0 { j as f64 } else { j as f64 + epsilon })
        .collect();
    let top = z[m - 1];
    // Transposed Vandermonde-type system: Vᵀ w = e₀.
    let vt: Vec<Vec<f64>> = (0..m)
        .map(|j| z.iter().map(|&zl| (zl / top).powf(exps[j])).collect())
        .collect();
    let mut e0 = vec![0.0; m];
    e0[0] = 1.0;
    solve_dense(vt, e0)
}

/// Weighted Neumann trace using the levels in `(0, z_cap]` (at most the six
/// largest). Fails with fewer than four such levels.
pub fn neumann_trace_with(ext: &ExtensionField, z_cap: f64) -> Result<ScalarField, ExtensionError> {
    let eligible: Vec<usize> = (0..ext.z_levels().len())
        .filter(|&l| ext.z_levels()[l] > 0.0 && ext.z_levels()[l] <= z_cap * (1.0 + 1e-12))
        .collect();
    if eligible.len() < MIN_TRACE_LEVELS {
        return Err(ExtensionError::InsufficientResolution {
            needed: MIN_TRACE_LEVELS,
            found: eligible.len(),
            z_max: z_cap,
        });
    }
    let used = &eligible[eligible.len().saturating_sub(MAX_TRACE_LEVELS)..];
    let z: Vec<f64> = used.iter().map(|&l| ext.z_levels()[l]).collect();
    let w = extrapolation_weights(&z, ext.epsilon());
    let base = ext.level(0);
    let one_minus = 1.0 - ext.epsilon();
    let mut out = vec![0.0; base.len()];
    for (&l, (&zl, &wl)) in used.iter().zip(z.iter().zip(&w)) {
        let scale = wl / zl.powf(one_minus);
        for (o, (v, b)) in out.iter_mut().zip(ext.level(l).iter().zip(base)) {
            *o += scale * (v - b);
        }
    }
    for o in &mut out {
        *o *= one_minus;
    }
    Ok(ScalarField::new(*ext.grid(), out, ext.time())?)
}

/// Weighted Neumann trace with the level cap `0.1 / k_eff` set by the
/// field's effective bandwidth. A field without non-zero modes has trace 0.
pub fn neumann_trace(ext: &ExtensionField) -> Result<ScalarField, ExtensionError> {
    let k_eff = effective_bandwidth(ext);
    if k_eff == 0.0 {
        return Ok(ScalarField::zeros(*ext.grid(), ext.time()));
    }
    neumann_trace_with(ext, TRACE_RESOLUTION_FACTOR / k_eff)
}

/// Ratio of the measured trace to `Λ^{1−ε} θ`, measured per single mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnCalibration {
    pub epsilon: f64,
    /// Signed constant from the first wavenumber; the trace divided by it
    /// reproduces `Λ^{1−ε} θ`.
    pub constant: f64,
    /// `−2^ε Γ((1+ε)/2) / Γ((1−ε)/2)` for comparison.
    pub closed_form: f64,
    pub per_mode: Vec<(i64, f64)>,
    /// `max |d_k / d_first − 1|`.
    pub spread: f64,
}

/// Measure the trace constant on `cos(k x₁)` for each `k`, on an `n`-point
/// grid with a six-level ladder under `0.1/k`.
pub fn calibrate_dtn(epsilon: f64, wavenumbers: &[i64], n: usize) -> Result<DtnCalibration, ExtensionError> {
    let grid = Grid::periodic(n)?;
    let mut per_mode = Vec::with_capacity(wavenumbers.len());
    for &k in wavenumbers {
        let kf = k as f64;
        let theta = ScalarField::from_fn(grid, 0.0, |x| (kf * x[0]).cos())?;
        let ext = extend(
            &theta,
            &geometric_ladder(TRACE_RESOLUTION_FACTOR / kf, MAX_TRACE_LEVELS),
            epsilon,
        )?;
        let trace = neumann_trace(&ext)?;
        let lap = kf.powf(1.0 - epsilon);
        let num: f64 = trace
            .values()
            .iter()
            .zip(theta.values())
            .map(|(t, v)| t * lap * v)
            .sum();
        let den: f64 = theta.values().iter().map(|v| (lap * v).powi(2)).sum();
        per_mode.push((k, num / den));
    }
    let constant = per_mode.first().map(|p| p.1).unwrap_or(f64::NAN);
    let spread = per_mode
        .iter()
        .map(|p| (p.1 / constant - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(DtnCalibration {
        epsilon,
        constant,
        closed_form: -dtn_constant(epsilon),
        per_mode,
        spread,
    })
}

/// Trace of a field against the spectral operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnCheck {
    pub epsilon: f64,
    pub constant: f64,
    /// `‖trace/d_ε − Λ^{1−ε}θ‖ / ‖Λ^{1−ε}θ‖`.
    pub relative_error: f64,
    pub pass: bool,
}

pub const DTN_TOLERANCE: f64 = 0.01;

/// Extend `theta` on a ladder under its bandwidth, divide the trace by the
/// constant measured on `cos x₁`, and compare with `Λ^{1−ε} θ`.
pub fn dtn_check(theta: &ScalarField, epsilon: f64) -> Result<DtnCheck, ExtensionError> {
    let k_eff = spectral_bandwidth(&forward_transform(theta)?);
    let constant = calibrate_dtn(epsilon, &[1], theta.grid().n().min(64))?.constant;
    let lap = fractional_laplacian(theta, 1.0 - epsilon)?;
    let relative_error = if k_eff == 0.0 {
        0.0
    } else {
        let ext = extend(
            theta,
            &geometric_ladder(TRACE_RESOLUTION_FACTOR / k_eff, MAX_TRACE_LEVELS),
            epsilon,
        )?;
        let tr = neumann_trace(&ext)?.map(|v| v / constant)?;
        tr.axpby(1.0, &lap, -1.0)?.l2_norm() / lap.l2_norm()
    };
    Ok(DtnCheck {
        epsilon,
        constant,
        relative_error,
        pass: relative_error <= DTN_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{fractional_laplacian, inverse_transform, SpectralField};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_trace_of_sine() {
        let grid = Grid::periodic(32).unwrap();
        let theta = ScalarField::from_fn(grid, 0.0, |x| x[0].sin()).unwrap();
        let ext = extend(&theta, &geometric_ladder(0.1, 6), 0.0).unwrap();
        let tr = neumann_trace(&ext).unwrap();
        let cal = calibrate_dtn(0.0, &[1], 32).unwrap();
        assert!((cal.constant + 1.0).abs() < 1e-7);
        for (t, v) in tr.values().iter().zip(theta.values()) {
            assert!((t + v).abs() < 1e-7);
        }
    }

    #[test]
    fn constant_mode_has_zero_trace() {
        let grid = Grid::periodic(16).unwrap();
        let theta = ScalarField::from_fn(grid, 0.0, |_| 0.7).unwrap();
        let ext = extend(&theta, &[0.0, 0.5], 0.1).unwrap();
        assert_eq!(neumann_trace(&ext).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn too_few_small_levels_rejected() {
        let grid = Grid::periodic(16).unwrap();
        let theta = ScalarField::from_fn(grid, 0.0, |x| (3.0 * x[0]).sin()).unwrap();
        let ext = extend(&theta, &[0.0, 0.01, 0.02, 0.5, 1.0], 0.1).unwrap();
        assert!(matches!(
            neumann_trace(&ext),
            Err(ExtensionError::InsufficientResolution { found: 2, .. })
        ));
    }

    #[test]
    fn calibration_matches_closed_form_and_is_mode_independent() {
        for eps in [0.0, 0.05, 0.1, 0.3] {
            let cal = calibrate_dtn(eps, &[1, 2, 4, 8], 32).unwrap();
            assert!(cal.spread < 5e-3, "ε = {eps}: spread {}", cal.spread);
            assert!(
                (cal.constant / cal.closed_form - 1.0).abs() < 1e-6,
                "ε = {eps}: {cal:?}"
            );
        }
    }

    #[test]
    fn constant_is_continuous_at_zero_weight() {
        let d0 = calibrate_dtn(0.0, &[1], 32).unwrap().constant;
        let d = calibrate_dtn(0.01, &[1], 32).unwrap().constant;
        assert!((d / d0 - 1.0).abs() < 0.02, "{d} vs {d0}");
    }

    #[test]
    fn random_field_trace_matches_spectral_operator() {
        let grid = Grid::periodic(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut spec = SpectralField::zeros(grid);
        for a in -8i64..=8 {
            for b in 0i64..=8 {
                if b == 0 && a <= 0 {
                    continue;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let idx = |m: i64| m.rem_euclid(64) as usize;
                spec.coefficients_mut()[grid.index(idx(a), idx(b))] = c;
                spec.coefficients_mut()[grid.index(idx(-a), idx(-b))] = c.conj();
            }
        }
        let theta = inverse_transform(&spec, 0.0).unwrap();
        let eps = 0.05;
        let k_eff = (128.0f64).sqrt();
        let ext = extend(&theta, &geometric_ladder(0.1 / k_eff, 6), eps).unwrap();
        let d = calibrate_dtn(eps, &[1], 32).unwrap().constant;
        let tr = neumann_trace(&ext).unwrap().map(|v| v / d).unwrap();
        let lap = fractional_laplacian(&theta, 1.0 - eps).unwrap();
        let rel = tr.axpby(1.0, &lap, -1.0).unwrap().l2_norm() / lap.l2_norm();
        assert!(rel < 0.01, "relative error {rel}");
    }
}
