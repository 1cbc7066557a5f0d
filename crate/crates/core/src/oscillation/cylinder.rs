//! Parabolic cylinders `Q_r = B_r(x₀) × [0, r) × (t₀ − r^α, t₀]` and
//! oscillations over them on the z = 0 slice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OscillationError, RecenterPath, SpaceTimeField};
use crate::spectral::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub center_x: [f64; 2],
    pub center_t: f64,
    pub radius: f64,
    pub alpha: f64,
}

impl ParabolicCylinder {
    pub fn new(center_x: [f64; 2], center_t: f64, radius: f64, alpha: f64) -> Self {
        Self {
            center_x,
            center_t,
            radius,
            alpha,
        }
    }

    /// `Q_r` of the normalized frame: centred at `(0, 1)`.
    pub fn unit(radius: f64, alpha: f64) -> Self {
        Self::new([0.0, 0.0], 1.0, radius, alpha)
    }

    /// `(t₀ − r^α, t₀]`, returned as its closure.
    pub fn time_interval(&self) -> (f64, f64) {
        (self.center_t - self.radius.powf(self.alpha), self.center_t)
    }

    /// Membership of a point given as its offset from `center_x`.
    pub fn contains_offset(&self, dx: [f64; 2], t: f64) -> bool {
        let (t0, t1) = self.time_interval();
        dx[0].hypot(dx[1]) < self.radius && t > t0 && t <= t1
    }

    pub fn contains(&self, x: [f64; 2], t: f64) -> bool {
        self.contains_offset([x[0] - self.center_x[0], x[1] - self.center_x[1]], t)
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Self { radius, ..*self }
    }
}

/// Max minus min of θ over grid nodes and snapshots inside the cylinder.
pub fn oscillation(history: &[ScalarField], cyl: &ParabolicCylinder) -> Result<f64, OscillationError> {
    let first = history.first().ok_or(OscillationError::EmptyHistory)?;
    let (t0, t1) = cyl.time_interval();
    let have_from = history.iter().map(|s| s.time()).fold(f64::INFINITY, f64::min);
    let have_to = history.iter().map(|s| s.time()).fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * t1.abs().max(1.0);
    if have_from > t0 + slack || have_to < t1 - slack {
        return Err(OscillationError::NotCovered {
            needed_from: t0,
            needed_to: t1,
            have_from,
            have_to,
        });
    }
    let grid = *first.grid();
    let across = 2.0 * cyl.radius / grid.spacing();
    if across < 8.0 {
        return Err(OscillationError::Unresolved {
            radius: cyl.radius,
            points: across,
        });
    }
    let n = grid.n();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for snap in history {
        if snap.grid() != &grid {
            return Err(crate::spectral::SpectralError::GridMismatch.into());
        }
        if !(snap.time() > t0 && snap.time() <= t1 + slack) {
            continue;
        }
        for j in 0..n {
            for i in 0..n {
                let d = grid.min_image(grid.coordinates(i, j), cyl.center_x);
                if d[0].hypot(d[1]) < cyl.radius {
                    let v = snap.at(i, j);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
    }
    Ok(if hi >= lo { hi - lo } else { 0.0 })
}

/// Sample set for a cylinder: a square lattice of spacing `r / per_radius`
/// clipped to the open ball, at `time_samples` times
/// `t₀ − j r^α / time_samples`, `j = 0, …, time_samples − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderLattice {
    pub per_radius: usize,
    pub time_samples: usize,
}

impl Default for CylinderLattice {
    fn default() -> Self {
        Self {
            per_radius: 12,
            time_samples: 9,
        }
    }
}

impl CylinderLattice {
    pub fn offsets(&self, radius: f64) -> Vec<[f64; 2]> {
        let q = self.per_radius as i64;
        let h = radius / q as f64;
        let mut out = Vec::new();
        for j in -q..=q {
            for i in -q..=q {
                let x = [i as f64 * h, j as f64 * h];
                if x[0].hypot(x[1]) < radius {
                    out.push(x);
                }
            }
        }
        out
    }

    pub fn times(&self, cyl: &ParabolicCylinder) -> Vec<f64> {
        let span = cyl.radius.powf(cyl.alpha);
        (0..self.time_samples)
            .map(|j| cyl.center_t - span * j as f64 / self.time_samples as f64)
            .collect()
    }
}

/// `(min, max)` of `θ(x + V(t), t)` over the lattice of the cylinder, with
/// `V ≡ 0` when no path is given.
pub fn sampled_extremes(
    field: &dyn SpaceTimeField,
    cyl: &ParabolicCylinder,
    lattice: &CylinderLattice,
    shift: Option<&RecenterPath>,
) -> (f64, f64) {
    let offsets = lattice.offsets(cyl.radius);
    lattice
        .times(cyl)
        .par_iter()
        .map(|&t| {
            let v = shift.map_or([0.0; 2], |p| p.at(t));
            let pts: Vec<[f64; 2]> = offsets
                .iter()
                .map(|d| [cyl.center_x[0] + d[0] + v[0], cyl.center_x[1] + d[1] + v[1]])
                .collect();
            field
                .sample(&pts, t)
                .into_iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        })
}

/// Oscillation of a space-time field over the lattice of a cylinder.
pub fn sampled_oscillation(field: &dyn SpaceTimeField, cyl: &ParabolicCylinder, lattice: &CylinderLattice) -> f64 {
    let (lo, hi) = sampled_extremes(field, cyl, lattice, None);
    (hi - lo).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillation::FnField;
    use crate::spectral::Grid;

    fn frozen(f: impl Fn([f64; 2]) -> f64 + Copy) -> Vec<ScalarField> {
        let grid = Grid::periodic(256).unwrap();
        (0..5)
            .map(|k| ScalarField::from_fn(grid, 0.25 * k as f64, f).unwrap())
            .collect()
    }

    #[test]
    fn constant_field_has_zero_oscillation() {
        let h = frozen(|_| 0.3);
        assert_eq!(oscillation(&h, &ParabolicCylinder::unit(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn sine_oscillation_over_unit_ball() {
        let h = frozen(|x| x[0].sin());
        let osc = oscillation(&h, &ParabolicCylinder::unit(1.0, 0.9)).unwrap();
        let h_x = 2.0 * std::f64::consts::PI / 256.0;
        assert!(osc <= 2.0 * 1f64.sin());
        assert!(2.0 * 1f64.sin() - osc < 2.0 * h_x);
    }

    #[test]
    fn nested_cylinders_have_nested_oscillations() {
        let h = frozen(|x| (x[0] + 0.3).sin() * (2.0 * x[1]).cos());
        let mut prev = f64::INFINITY;
        for r in [1.0, 0.75, 0.5, 0.25] {
            let osc = oscillation(&h, &ParabolicCylinder::unit(r, 0.95)).unwrap();
            assert!(osc <= prev);
            prev = osc;
        }
    }

    #[test]
    fn coverage_and_resolution_enforced() {
        let h = frozen(|x| x[0]);
        let late = ParabolicCylinder::new([0.0, 0.0], 2.0, 1.0, 1.0);
        assert!(matches!(
            oscillation(&h, &late),
            Err(OscillationError::NotCovered { .. })
        ));
        let tiny = ParabolicCylinder::unit(0.05, 1.0);
        assert!(matches!(
            oscillation(&h, &tiny),
            Err(OscillationError::Unresolved { .. })
        ));
    }

    #[test]
    fn lattice_oscillation_of_linear_field() {
        let f = FnField(|x: [f64; 2], t: f64| x[0] + t);
        let cyl = ParabolicCylinder::unit(1.0, 1.0);
        let lat = CylinderLattice {
            per_radius: 10,
            time_samples: 4,
        };
        // x₁ ∈ [−0.9, 0.9] on the lattice, t ∈ {0.25, …, 1}.
        assert!((sampled_oscillation(&f, &cyl, &lat) - 2.55).abs() < 1e-12);
        assert!(cyl.contains([0.5, 0.5], 0.5) && !cyl.contains([0.5, 0.5], 0.0));
    }
}
