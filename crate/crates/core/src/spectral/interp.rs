use num_complex::Complex64;

use super::{Grid, SpectralField};

/// Evaluates the trigonometric interpolant `Σ θ̂ₖ e^{ik·x}` at arbitrary
/// points. Modes below `tolerance · max|θ̂|` are dropped up front, which makes
/// point evaluation cheap for smooth fields.
#[derive(Debug, Clone)]
pub struct PointEvaluator {
    base: f64,
    modes: Vec<(i64, i64, Complex64)>,
    k1_max: i64,
    k2_max: i64,
}

impl PointEvaluator {
    pub fn new(spec: &SpectralField, tolerance: f64) -> Self {
        let grid: Grid = *spec.grid();
        let n = grid.n();
        let peak = spec.coefficients().iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let cut = peak * tolerance;
        let mut modes = Vec::new();
        let (mut k1_max, mut k2_max) = (0, 0);
        for j in 0..n {
            for i in 0..n {
                if grid.is_nyquist(i, j) {
                    continue;
                }
                let c = spec.at(i, j);
                if c.norm() > cut && c.norm() > 0.0 {
                    let (a, b) = (grid.signed_index(i), grid.signed_index(j));
                    k1_max = k1_max.max(a.abs());
                    k2_max = k2_max.max(b.abs());
                    modes.push((a, b, c));
                }
            }
        }
        Self {
            base: grid.base_wavenumber(),
            modes,
            k1_max,
            k2_max,
        }
    }

    /// Evaluator over an explicit list of signed integer modes `(m₁, m₂, θ̂)`
    /// with wavevector `base · m`.
    pub fn from_modes(base: f64, modes: Vec<(i64, i64, Complex64)>) -> Self {
        let k1_max = modes.iter().map(|m| m.0.abs()).max().unwrap_or(0);
        let k2_max = modes.iter().map(|m| m.1.abs()).max().unwrap_or(0);
        Self {
            base,
            modes,
            k1_max,
            k2_max,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    fn phases(&self, x: f64, k_max: i64) -> Vec<Complex64> {
        // Index m + k_max holds e^{i m base x}; direct evaluation keeps the
        // phase error at round-off for every m.
        (-k_max..=k_max)
            .map(|m| Complex64::from_polar(1.0, m as f64 * self.base * x))
            .collect()
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        if self.modes.is_empty() {
            return 0.0;
        }
        let p1 = self.phases(x[0], self.k1_max);
        let p2 = self.phases(x[1], self.k2_max);
        let mut acc = 0.0;
        for &(a, b, c) in &self.modes {
            let e = p1[(a + self.k1_max) as usize] * p2[(b + self.k2_max) as usize];
            acc += c.re * e.re - c.im * e.im;
        }
        acc
    }

    pub fn eval_many(&self, points: &[[f64; 2]]) -> Vec<f64> {
        points.iter().map(|&p| self.eval(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, ScalarField};

    #[test]
    fn reproduces_nodes_and_off_grid_points() {
        let grid = Grid::periodic(32).unwrap();
        let f = |x: [f64; 2]| (x[0]).sin() * (2.0 * x[1]).cos() + 0.3 * (3.0 * x[0] - x[1]).cos();
        let field = ScalarField::from_fn(grid, 0.0, f).unwrap();
        let ev = PointEvaluator::new(&forward_transform(&field).unwrap(), 1e-14);
        for p in [[0.0, 0.0], [0.37, 2.9], [5.1, 1.234], [grid.spacing() * 3.0, 0.0]] {
            assert!((ev.eval(p) - f(p)).abs() < 1e-13);
        }
    }
}
