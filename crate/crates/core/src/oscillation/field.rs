//! Space-time fields evaluated at arbitrary points, and the two frame
//! changes of the iteration.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;

use super::RecenterPath;
use crate::solver::{Solver, SolverConfig};
use crate::spectral::{inverse_transform, Grid, PointEvaluator, ScalarField, SpectralField};

/// `θ(x, t)` on the z = 0 slice, evaluated in batches at one time.
pub trait SpaceTimeField: Send + Sync {
    fn sample(&self, points: &[[f64; 2]], t: f64) -> Vec<f64>;

    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        self.sample(&[x], t)[0]
    }
}

/// A closed-form field.
pub struct FnField<F>(pub F);

impl<F: Fn([f64; 2], f64) -> f64 + Send + Sync> SpaceTimeField for FnField<F> {
    fn sample(&self, points: &[[f64; 2]], t: f64) -> Vec<f64> {
        points.iter().map(|&x| (self.0)(x, t)).collect()
    }
}

type Modes = Vec<(i64, i64, Complex64)>;

fn pruned(spec: &SpectralField, tolerance: f64) -> Modes {
    let grid = *spec.grid();
    let n = grid.n();
    let peak = spec.coefficients().iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let cut = peak * tolerance;
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = spec.at(i, j);
            if c.norm() > cut && !grid.is_nyquist(i, j) {
                out.push((grid.signed_index(i), grid.signed_index(j), c));
            }
        }
    }
    out
}

/// Solver snapshots with their time derivatives, interpolated by cubic
/// Hermite polynomials in time and evaluated exactly per mode in space.
/// Modes below `tolerance` times the peak of each snapshot are dropped.
#[derive(Debug, Clone)]
pub struct SpectralHistory {
    grid: Grid,
    tolerance: f64,
    times: Vec<f64>,
    values: Vec<Modes>,
    rates: Vec<Modes>,
}

impl SpectralHistory {
    pub fn new(grid: Grid, tolerance: f64) -> Self {
        Self {
            grid,
            tolerance,
            times: Vec::new(),
            values: Vec::new(),
            rates: Vec::new(),
        }
    }

    /// A time-independent history.
    pub fn frozen(field: &ScalarField) -> Result<Self, crate::spectral::SpectralError> {
        let mut h = Self::new(*field.grid(), 1e-14);
        let spec = crate::spectral::forward_transform(field)?;
        h.push(field.time(), &spec, &SpectralField::zeros(*field.grid()));
        Ok(h)
    }

    /// Append a snapshot; times must increase.
    pub fn push(&mut self, time: f64, spec: &SpectralField, rate: &SpectralField) {
        assert!(
            self.times.last().is_none_or(|&t| time > t),
            "snapshot times must increase"
        );
        self.times.push(time);
        self.values.push(pruned(spec, self.tolerance));
        self.rates.push(pruned(rate, self.tolerance));
    }

    /// Run the solver from `initial` and keep every step whose interval
    /// reaches `[from, config.t_end]`.
    pub fn record(
        initial: &ScalarField,
        config: SolverConfig,
        from: f64,
        tolerance: f64,
    ) -> Result<Self, crate::solver::SolverError> {
        let mut solver = Solver::new(initial, config.clone())?;
        let mut h = Self::new(*initial.grid(), tolerance);
        let (steps, dt) = config.steps_for(config.t_end - initial.time());
        for s in 0..=steps {
            if solver.time() + dt > from || s == steps {
                h.push(solver.time(), solver.spectrum(), &solver.time_derivative());
            }
            if s < steps {
                solver.step_by(dt)?;
            }
        }
        Ok(h)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `(first, last)` snapshot time; a frozen history covers every time.
    pub fn span(&self) -> (f64, f64) {
        if self.times.len() == 1 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (self.times[0], *self.times.last().unwrap_or(&0.0))
        }
    }

    pub fn mode_count(&self) -> usize {
        self.values.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn modes_at(&self, t: f64) -> Modes {
        if self.times.len() == 1 {
            return self.values[0].clone();
        }
        let last = self.times.len() - 1;
        let t = t.clamp(self.times[0], self.times[last]);
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1).min(last - 1);
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let weights = [
            (&self.values[i], 2.0 * s3 - 3.0 * s2 + 1.0),
            (&self.rates[i], h * (s3 - 2.0 * s2 + s)),
            (&self.values[i + 1], -2.0 * s3 + 3.0 * s2),
            (&self.rates[i + 1], h * (s3 - s2)),
        ];
        let mut acc: HashMap<(i64, i64), Complex64> = HashMap::new();
        for (modes, w) in weights {
            if w == 0.0 {
                continue;
            }
            for &(a, b, c) in modes {
                *acc.entry((a, b)).or_default() += c * w;
            }
        }
        let mut out: Modes = acc.into_iter().map(|((a, b), c)| (a, b, c)).collect();
        out.sort_by_key(|m| (m.1, m.0));
        out
    }

    /// Interpolated field on the grid at time `t`.
    pub fn grid_field(&self, t: f64) -> ScalarField {
        let grid = self.grid;
        let n = grid.n() as i64;
        let mut spec = SpectralField::zeros(grid);
        for (a, b, c) in self.modes_at(t) {
            let idx = grid.index(a.rem_euclid(n) as usize, b.rem_euclid(n) as usize);
            spec.coefficients_mut()[idx] = c;
        }
        inverse_transform(&spec, t).expect("interpolated coefficients are finite")
    }
}

impl SpaceTimeField for SpectralHistory {
    fn sample(&self, points: &[[f64; 2]], t: f64) -> Vec<f64> {
        let eval = PointEvaluator::from_modes(self.grid.base_wavenumber(), self.modes_at(t));
        points.par_iter().map(|&p| eval.eval(p)).collect()
    }
}

/// `θ̃(x, t) = θ(c + λx, t_end − λ^α (1 − t)) / A`: the window
/// `[t_end − λ^α, t_end]` becomes `[0, 1]` and the drift picks up the factor
/// `M = A λ^{α−1}`.
pub struct Normalized {
    pub parent: Arc<dyn SpaceTimeField>,
    pub center: [f64; 2],
    pub t_end: f64,
    pub lambda: f64,
    pub amplitude: f64,
    pub alpha: f64,
}

impl Normalized {
    pub fn drift_factor(&self) -> f64 {
        self.amplitude * self.lambda.powf(self.alpha - 1.0)
    }

    pub fn parent_time(&self, t: f64) -> f64 {
        self.t_end - self.lambda.powf(self.alpha) * (1.0 - t)
    }
}

impl SpaceTimeField for Normalized {
    fn sample(&self, points: &[[f64; 2]], t: f64) -> Vec<f64> {
        let mapped: Vec<[f64; 2]> = points
            .iter()
            .map(|x| [self.center[0] + self.lambda * x[0], self.center[1] + self.lambda * x[1]])
            .collect();
        let inv = 1.0 / self.amplitude;
        self.parent
            .sample(&mapped, self.parent_time(t))
            .into_iter()
            .map(|v| v * inv)
            .collect()
    }
}

/// `θ_{k+1}(x, t) = ρ^{−δ} (θ_k(ρx + V(t′), t′) − m)` with
/// `t′ = 1 − ρ^α (1 − t)`.
pub struct Rescaled {
    pub parent: Arc<dyn SpaceTimeField>,
    pub rho: f64,
    pub delta: f64,
    pub alpha: f64,
    pub m: f64,
    pub path: RecenterPath,
}

impl Rescaled {
    pub fn parent_time(&self, t: f64) -> f64 {
        1.0 - self.rho.powf(self.alpha) * (1.0 - t)
    }
}

impl SpaceTimeField for Rescaled {
    fn sample(&self, points: &[[f64; 2]], t: f64) -> Vec<f64> {
        let tp = self.parent_time(t);
        let v = self.path.at(tp);
        let mapped: Vec<[f64; 2]> = points
            .iter()
            .map(|x| [self.rho * x[0] + v[0], self.rho * x[1] + v[1]])
            .collect();
        let scale = self.rho.powf(-self.delta);
        self.parent
            .sample(&mapped, tp)
            .into_iter()
            .map(|u| scale * (u - self.m))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::forward_transform;

    #[test]
    fn frozen_history_reproduces_field() {
        let grid = Grid::periodic(32).unwrap();
        let f = ScalarField::from_fn(grid, 0.0, |x| x[0].sin() + 0.5 * (x[0] - 2.0 * x[1]).cos()).unwrap();
        let h = SpectralHistory::frozen(&f).unwrap();
        let p: [f64; 2] = [0.3, 1.7];
        let exact = p[0].sin() + 0.5 * (p[0] - 2.0 * p[1]).cos();
        assert!((h.value(p, 12.0) - exact).abs() < 1e-13);
        let g = h.grid_field(3.0);
        assert!(g.axpby(1.0, &f, -1.0).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn hermite_interpolation_is_exact_for_cubics_in_time() {
        let grid = Grid::periodic(16).unwrap();
        let base = forward_transform(&ScalarField::from_fn(grid, 0.0, |x| x[0].cos()).unwrap()).unwrap();
        let scaled = |s: f64| SpectralField::new(grid, base.coefficients().iter().map(|c| c * s).collect()).unwrap();
        // Amplitude a(t) = t³ − t.
        let mut h = SpectralHistory::new(grid, 1e-14);
        for t in [0.0, 0.5, 1.0] {
            h.push(t, &scaled(t * t * t - t), &scaled(3.0 * t * t - 1.0));
        }
        for t in [0.1, 0.37, 0.8] {
            let want = (t * t * t - t) * 0.4f64.cos();
            assert!((h.value([0.4, 2.0], t) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn rescaled_view_composes_affine_maps() {
        let base: Arc<dyn SpaceTimeField> = Arc::new(FnField(|x: [f64; 2], t: f64| x[0] + 2.0 * x[1] + t));
        let path = RecenterPath::constant([0.1, -0.2], 0.0, 1.0);
        let view = Rescaled {
            parent: base,
            rho: 0.25,
            delta: 0.5,
            alpha: 1.0,
            m: 0.3,
            path,
        };
        // t′ = 1 − 0.25·(1 − 0.5) = 0.875; parent point (0.35, 0.05).
        let got = view.value([1.0, 1.0], 0.5);
        let want = 2.0 * (0.35 + 0.1 + 0.875 - 0.3);
        assert!((got - want).abs() < 1e-14);
    }
}
