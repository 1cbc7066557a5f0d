//! Initial data.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{HarnessError, InitialCondition};
use crate::seed;
use crate::solver::read_checkpoint;
use crate::spectral::{inverse_transform, Grid, ScalarField, SpectralField};

/// Build `θ₀` on the `n`-point 2π grid. Random data draws from the stream
/// `("initial-condition", 0)` of `seed`.
pub fn initial_field(ic: &InitialCondition, n: usize, seed: u64) -> Result<ScalarField, HarnessError> {
    let grid = Grid::periodic(n)?;
    match ic {
        InitialCondition::SingleMode => Ok(ScalarField::from_fn(grid, 0.0, |x| x[0].sin())?),
        InitialCondition::RandomBandLimited {
            k_min,
            k_max,
            amplitude,
        } => {
            let mut rng = seed::rng(seed, "initial-condition", 0);
            Ok(random_band_limited(grid, *k_min, *k_max, *amplitude, &mut rng)?)
        }
        InitialCondition::File(path) => {
            let cp = read_checkpoint(path).map_err(|source| HarnessError::Checkpoint {
                path: path.clone(),
                source,
            })?;
            if cp.field.grid().n() != n {
                return Err(HarnessError::InvalidConfig(format!(
                    "checkpoint {} has n = {}, config has n = {n}",
                    path.display(),
                    cp.field.grid().n()
                )));
            }
            Ok(cp.field.with_time(0.0))
        }
    }
}

/// Gaussian coefficients with variance `|k|^{−2}` on the shell
/// `k_min ≤ |k| ≤ k_max`, scaled so that `max|θ| = amplitude`.
pub fn random_band_limited(
    grid: Grid,
    k_min: f64,
    k_max: f64,
    amplitude: f64,
    rng: &mut impl Rng,
) -> Result<ScalarField, crate::spectral::SpectralError> {
    let n = grid.n();
    let kmax = k_max.floor() as i64;
    let mut spec = SpectralField::zeros(grid);
    let idx = |m: i64| m.rem_euclid(n as i64) as usize;
    for b in 0..=kmax {
        for a in -kmax..=kmax {
            if b == 0 && a <= 0 {
                continue;
            }
            let k = ((a * a + b * b) as f64).sqrt();
            if k < k_min || k > k_max {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let c = num_complex::Complex64::new(re, im) / k;
            spec.coefficients_mut()[grid.index(idx(a), idx(b))] = c;
            spec.coefficients_mut()[grid.index(idx(-a), idx(-b))] = c.conj();
        }
    }
    let theta = inverse_transform(&spec, 0.0)?;
    let peak = theta.max_abs();
    if peak == 0.0 {
        return Ok(theta);
    }
    theta.map(|v| v * amplitude / peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::forward_transform;

    #[test]
    fn random_data_is_band_limited_and_normalised() {
        let grid = Grid::periodic(64).unwrap();
        let theta = random_band_limited(grid, 2.0, 6.0, 0.5, &mut seed::rng(1, "t", 0)).unwrap();
        assert!((theta.max_abs() - 0.5).abs() < 1e-12);
        let spec = forward_transform(&theta).unwrap();
        for j in 0..64 {
            for i in 0..64 {
                let [a, b] = grid.wavevector(i, j);
                let k = a.hypot(b);
                if !(2.0..=6.0).contains(&k) {
                    assert!(spec.at(i, j).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_field() {
        let ic = InitialCondition::RandomBandLimited {
            k_min: 2.0,
            k_max: 8.0,
            amplitude: 1.0,
        };
        assert_eq!(initial_field(&ic, 32, 9).unwrap(), initial_field(&ic, 32, 9).unwrap());
        assert_ne!(initial_field(&ic, 32, 9).unwrap(), initial_field(&ic, 32, 10).unwrap());
    }
}
