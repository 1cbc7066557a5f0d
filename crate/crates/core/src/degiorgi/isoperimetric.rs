//! `|{w ≤ 0}| · |{w ≥ 1}| ≤ C |{0 < w < 1}|^{1/2} ‖w‖_{Ḣ¹(z^ε)}` on `B₁*`,
//! with all measures taken against `z^ε dX`.
//!
//! `w` is clamped to `[0, 1]` first, so its gradient lives on the strip
//! `{0 < w < 1}` and the seminorm is `(∫_strip |∇w|² z^ε)^{1/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::integrate;
use super::{DeGiorgiError, GriddedHalfBall, HalfBall, MeasureEstimate, TrigPolynomial, WeightedRegion};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricResult {
    pub le_zero: MeasureEstimate,
    pub ge_one: MeasureEstimate,
    pub strip: MeasureEstimate,
    /// `∫_strip |∇w|² z^ε`.
    pub gradient_energy: MeasureEstimate,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// Combined one-sigma error of `lhs − C·rhs`.
    pub sigma: f64,
    pub pass: bool,
}

impl IsoperimetricResult {
    /// `lhs / rhs`, zero when the left side vanishes.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

pub fn isoperimetric_check(
    w: &GriddedHalfBall,
    constant: f64,
    mc: &WeightedRegion,
) -> Result<IsoperimetricResult, DeGiorgiError> {
    if mc.region.radius() > w.radius() * (1.0 + 1e-12) {
        return Err(DeGiorgiError::RegionMismatch {
            sampled: w.radius(),
            requested: mc.region.radius(),
        });
    }
    let [le_zero, ge_one, strip, gradient_energy] = integrate(mc, |x| {
        let v = w.value(x);
        if v <= 0.0 {
            [1.0, 0.0, 0.0, 0.0]
        } else if v >= 1.0 {
            [0.0, 1.0, 0.0, 0.0]
        } else {
            let g = w.gradient(x);
            [0.0, 0.0, 1.0, g[0] * g[0] + g[1] * g[1] + g[2] * g[2]]
        }
    })?;
    let (a, b) = (le_zero.estimate, ge_one.estimate);
    let (s, g) = (strip.estimate, gradient_energy.estimate);
    let lhs = a * b;
    let rhs = (s * g).sqrt();
    let sigma_lhs = ((b * le_zero.std_error).powi(2) + (a * ge_one.std_error).powi(2)).sqrt();
    let rel = |e: &MeasureEstimate| {
        if e.estimate > 0.0 {
            e.std_error / e.estimate
        } else {
            0.0
        }
    };
    let sigma_rhs = 0.5 * rhs * (rel(&strip).powi(2) + rel(&gradient_energy).powi(2)).sqrt();
    let sigma = (sigma_lhs.powi(2) + (constant * sigma_rhs).powi(2)).sqrt();
    Ok(IsoperimetricResult {
        le_zero,
        ge_one,
        strip,
        gradient_energy,
        lhs,
        rhs,
        constant,
        sigma,
        pass: lhs <= constant * rhs + 3.0 * sigma,
    })
}

/// `count` random trigonometric polynomials on `B₁*` (modes up to 4,
/// offset 1/2, spread 0.8), sampled on an `n³` grid.
pub fn random_family(seed: u64, count: usize, n: usize) -> Vec<GriddedHalfBall> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed, "isoperimetric-family", i as u64);
            TrigPolynomial::random(&mut rng, 1.0, 4, 0.8).gridded(n)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricCalibration {
    pub constant: f64,
    pub max_ratio: f64,
    pub safety: f64,
    /// `(ε, strip measure, lhs/rhs)` per function and exponent.
    pub ratios: Vec<(f64, f64, f64)>,
}

/// `C = safety · max lhs/rhs` over the family at each exponent.
pub fn calibrate_isoperimetric(
    family: &[GriddedHalfBall],
    epsilons: &[f64],
    sample_count: u64,
    seed: u64,
    safety: f64,
) -> Result<IsoperimetricCalibration, DeGiorgiError> {
    calibrate_on(family, HalfBall::B1Star, epsilons, sample_count, seed, safety)
}

/// Calibrate on `region` instead of `B₁*`; the family must cover it.
pub fn calibrate_on(
    family: &[GriddedHalfBall],
    region: HalfBall,
    epsilons: &[f64],
    sample_count: u64,
    seed: u64,
    safety: f64,
) -> Result<IsoperimetricCalibration, DeGiorgiError> {
    if family.is_empty() || epsilons.is_empty() {
        return Err(DeGiorgiError::EmptyFamily);
    }
    let mut ratios = Vec::with_capacity(family.len() * epsilons.len());
    for &eps in epsilons {
        for (i, w) in family.iter().enumerate() {
            let mc = WeightedRegion::new(
                region,
                eps,
                sample_count,
                seed::derive(seed, "isoperimetric-calibration", i as u64),
            );
            let r = isoperimetric_check(w, 0.0, &mc)?;
            ratios.push((eps, r.strip.estimate, r.ratio()));
        }
    }
    let max_ratio = ratios.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(IsoperimetricCalibration {
        constant: safety * max_ratio,
        max_ratio,
        safety,
        ratios,
    })
}

/// Calibrated constant per radius. The inequality is not scale invariant,
/// so these are logged side by side with no law asserted.
pub fn constants_by_radius(
    family: &[GriddedHalfBall],
    radii: &[f64],
    epsilons: &[f64],
    sample_count: u64,
    seed: u64,
    safety: f64,
) -> Result<Vec<(f64, f64)>, DeGiorgiError> {
    radii
        .iter()
        .map(|&r| {
            Ok((
                r,
                calibrate_on(family, HalfBall::Radius(r), epsilons, sample_count, seed, safety)?.constant,
            ))
        })
        .collect()
}
