//! Discrete Hölder seminorm on a decimated lattice.

use rayon::prelude::*;

use super::OscillationError;
use crate::spectral::ScalarField;

const MAX_SIDE: usize = 100;

/// `max |θ(x) − θ(y)| / |x − y|^δ` over all pairs of a lattice decimated to at
/// most 100 × 100 nodes, restricted to min-image separations `≥ min_sep`.
pub fn holder_estimate(theta: &ScalarField, delta: f64, min_sep: f64) -> Result<f64, OscillationError> {
    let grid = *theta.grid();
    let h = grid.spacing();
    if !(min_sep >= 2.0 * h) {
        return Err(OscillationError::SeparationTooSmall { min_sep, spacing: h });
    }
    let n = grid.n();
    let stride = n.div_ceil(MAX_SIDE);
    let mut nodes = Vec::new();
    for j in (0..n).step_by(stride) {
        for i in (0..n).step_by(stride) {
            nodes.push((grid.coordinates(i, j), theta.at(i, j)));
        }
    }
    let best = nodes
        .par_iter()
        .enumerate()
        .map(|(a, &(x, fx))| {
            let mut best = 0.0_f64;
            for &(y, fy) in &nodes[a + 1..] {
                let d = grid.min_image(y, x);
                let r = d[0].hypot(d[1]);
                if r >= min_sep {
                    best = best.max((fx - fy).abs() / r.powf(delta));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_zero_seminorm() {
        let theta = ScalarField::from_fn(Grid::periodic(64).unwrap(), 0.0, |_| 3.0).unwrap();
        assert_eq!(holder_estimate(&theta, 0.3, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn model_cusp_has_unit_seminorm() {
        let grid = Grid::periodic(128).unwrap();
        let delta = 0.4;
        let theta = ScalarField::from_fn(grid, 0.0, |x| {
            let d = grid.min_image(x, [0.0, 0.0]);
            d[0].abs().powf(delta)
        })
        .unwrap();
        let est = holder_estimate(&theta, delta, 2.0 * grid.spacing()).unwrap();
        assert!((est - 1.0).abs() < 0.05, "{est}");
    }

    #[test]
    fn smooth_field_is_stable_under_refinement() {
        let f = |x: [f64; 2]| (x[0]).sin() * (2.0 * x[1]).cos();
        let coarse = ScalarField::from_fn(Grid::periodic(64).unwrap(), 0.0, f).unwrap();
        let fine = ScalarField::from_fn(Grid::periodic(128).unwrap(), 0.0, f).unwrap();
        let a = holder_estimate(&coarse, 0.5, 0.3).unwrap();
        let b = holder_estimate(&fine, 0.5, 0.3).unwrap();
        assert!(a.is_finite() && b.is_finite());
        assert!((a - b).abs() / b < 0.1, "{a} vs {b}");
    }

    #[test]
    fn separation_below_two_cells_is_rejected() {
        let grid = Grid::periodic(32).unwrap();
        let theta = ScalarField::zeros(grid, 0.0);
        let h = 2.0 * PI / 32.0;
        assert!(matches!(
            holder_estimate(&theta, 0.5, 1.5 * h),
            Err(OscillationError::SeparationTooSmall { .. })
        ));
    }
}
