//! Monte Carlo integration against `z^ε dX` on half balls.
//!
//! Points are drawn uniformly in the disk and with density `∝ z^ε` in
//! `[0, r)`, so every estimate is `W · mean(f)` with the weighted volume
//! `W = π r² · r^{1+ε}/(1+ε)`. Samples are split into fixed-size chunks;
//! chunk `c` draws from its own stream derived from `(seed, c)` and chunk
//! sums are reduced in index order, so results do not depend on the thread
//! count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{DeGiorgiError, GriddedHalfBall};
use crate::seed;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfBall {
    B1Star,
    B2Star,
    /// `B_r*` for another radius.
    Radius(f64),
}

impl HalfBall {
    pub fn radius(&self) -> f64 {
        match *self {
            HalfBall::B1Star => 1.0,
            HalfBall::B2Star => 2.0,
            HalfBall::Radius(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedRegion {
    pub region: HalfBall,
    pub weight_exponent: f64,
    pub sample_count: u64,
    pub seed: u64,
}

impl WeightedRegion {
    pub fn new(region: HalfBall, weight_exponent: f64, sample_count: u64, seed: u64) -> Self {
        Self {
            region,
            weight_exponent,
            sample_count,
            seed,
        }
    }

    /// `∫_{B_r*} z^ε dX`.
    pub fn weighted_volume(&self) -> f64 {
        let r = self.region.radius();
        let e = self.weight_exponent;
        PI * r * r * r.powf(1.0 + e) / (1.0 + e)
    }

    fn validate(&self) -> Result<(), DeGiorgiError> {
        if self.sample_count == 0 {
            return Err(DeGiorgiError::ZeroSamples);
        }
        if !(0.0..1.0).contains(&self.weight_exponent) {
            return Err(DeGiorgiError::InvalidEpsilon(self.weight_exponent));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn draw(rng: &mut impl Rng, r: f64, eps: f64) -> [f64; 3] {
    let rad = r * rng.gen::<f64>().sqrt();
    let ang = 2.0 * PI * rng.gen::<f64>();
    let z = r * rng.gen::<f64>().powf(1.0 / (1.0 + eps));
    [rad * ang.cos(), rad * ang.sin(), z]
}

/// Weighted integrals of the `K` components of `f` over the region.
pub(crate) fn integrate<const K: usize>(
    mc: &WeightedRegion,
    f: impl Fn([f64; 3]) -> [f64; K] + Sync,
) -> Result<[MeasureEstimate; K], DeGiorgiError> {
    mc.validate()?;
    let r = mc.region.radius();
    let eps = mc.weight_exponent;
    let chunks = mc.sample_count.div_ceil(CHUNK);
    let partial: Vec<([f64; K], [f64; K])> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(mc.seed, "weighted-measure", c);
            let count = CHUNK.min(mc.sample_count - c * CHUNK);
            let mut s = [0.0; K];
            let mut s2 = [0.0; K];
            for _ in 0..count {
                let v = f(draw(&mut rng, r, eps));
                for q in 0..K {
                    s[q] += v[q];
                    s2[q] += v[q] * v[q];
                }
            }
            (s, s2)
        })
        .collect();
    let mut s = [0.0; K];
    let mut s2 = [0.0; K];
    for (a, b) in &partial {
        for q in 0..K {
            s[q] += a[q];
            s2[q] += b[q];
        }
    }
    let n = mc.sample_count as f64;
    let vol = mc.weighted_volume();
    Ok(std::array::from_fn(|q| {
        let mean = s[q] / n;
        let var = (s2[q] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        MeasureEstimate {
            estimate: vol * mean,
            std_error: vol * (var / n).sqrt(),
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSet {
    LeZero,
    GeOne,
    Between,
}

impl LevelSet {
    pub fn contains(&self, w: f64) -> bool {
        match self {
            LevelSet::LeZero => w <= 0.0,
            LevelSet::GeOne => w >= 1.0,
            LevelSet::Between => w > 0.0 && w < 1.0,
        }
    }
}

/// Monte Carlo estimate of `∫_{set} z^ε dX` over the region.
pub fn weighted_measure(
    w: &GriddedHalfBall,
    set: LevelSet,
    mc: &WeightedRegion,
) -> Result<MeasureEstimate, DeGiorgiError> {
    if mc.region.radius() > w.radius() * (1.0 + 1e-12) {
        return Err(DeGiorgiError::RegionMismatch {
            sampled: w.radius(),
            requested: mc.region.radius(),
        });
    }
    let [m] = integrate(mc, |x| [if set.contains(w.value(x)) { 1.0 } else { 0.0 }])?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_half_measures() {
        let w = GriddedHalfBall::sample(1.0, 5, |_| 0.5);
        let mc = WeightedRegion::new(HalfBall::B1Star, 0.0, 100_000, 3);
        let le = weighted_measure(&w, LevelSet::LeZero, &mc).unwrap();
        assert_eq!(le.estimate, 0.0);
        let mid = weighted_measure(&w, LevelSet::Between, &mc).unwrap();
        assert!((mid.estimate - PI).abs() < 1e-12);
    }

    #[test]
    fn segment_area_within_three_sigma() {
        let w = GriddedHalfBall::sample(1.0, 9, |x| 2.0 * x[0]);
        let mc = WeightedRegion::new(HalfBall::B1Star, 0.0, 200_000, 11);
        let m = weighted_measure(&w, LevelSet::GeOne, &mc).unwrap();
        let exact = PI / 3.0 - 3f64.sqrt() / 4.0;
        assert!((m.estimate - exact).abs() < 3.0 * m.std_error, "{m:?} vs {exact}");
    }

    #[test]
    fn weighted_volume_and_reproducibility() {
        let w = GriddedHalfBall::sample(1.0, 5, |x| x[2] - 0.5);
        let mc = WeightedRegion::new(HalfBall::B1Star, 0.3, 50_000, 5);
        let a = weighted_measure(&w, LevelSet::LeZero, &mc).unwrap();
        let b = weighted_measure(&w, LevelSet::LeZero, &mc).unwrap();
        assert_eq!(a, b);
        // ∫_{z<1/2} z^0.3 over the unit disk: π (1/2)^{1.3}/1.3.
        let exact = PI * 0.5f64.powf(1.3) / 1.3;
        assert!((a.estimate - exact).abs() < 3.0 * a.std_error);
        let doubled = WeightedRegion {
            sample_count: 100_000,
            ..mc
        };
        let c = weighted_measure(&w, LevelSet::LeZero, &doubled).unwrap();
        assert!((c.estimate - a.estimate).abs() < 3.0 * a.std_error.hypot(c.std_error));
    }

    #[test]
    fn zero_samples_rejected() {
        let w = GriddedHalfBall::sample(1.0, 3, |_| 0.0);
        let mc = WeightedRegion::new(HalfBall::B1Star, 0.0, 0, 0);
        assert!(matches!(
            weighted_measure(&w, LevelSet::LeZero, &mc),
            Err(DeGiorgiError::ZeroSamples)
        ));
    }
}
