//! Tail integral `∫_{|x−c|>1} |θ(x)| / |x − c|² dx`, taken over the
//! fundamental domain centred at `c`.

use serde::{Deserialize, Serialize};

use super::OscillationError;
use crate::spectral::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIntegral {
    pub value: f64,
    /// Radius of the largest disk around the center inside the domain; the
    /// square corners beyond it are included as well.
    pub truncation_radius: f64,
}

pub fn tail_integral(theta: &ScalarField, center: [f64; 2]) -> Result<TailIntegral, OscillationError> {
    let grid = *theta.grid();
    let half = 0.5 * grid.side_length();
    if half < 2.0 {
        return Err(OscillationError::DomainTooSmall { half_width: half });
    }
    let n = grid.n();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let d = grid.min_image(grid.coordinates(i, j), center);
            let r2 = d[0] * d[0] + d[1] * d[1];
            if r2 >= 1.0 {
                acc += theta.at(i, j).abs() / r2;
            }
        }
    }
    Ok(TailIntegral {
        value: acc * grid.spacing().powi(2),
        truncation_radius: half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub time: f64,
    pub tail_value: f64,
    /// `C ‖θ₀‖`.
    pub bound_basic: f64,
    /// `C (1 + log t) t^{−α} ‖θ₀‖`, for `t > 1` only.
    pub bound_improved: Option<f64>,
    pub pass: bool,
}

/// `tail(θ(t_cal)) / ‖θ₀‖`.
pub fn calibrate_tail_constant(
    snapshot: &ScalarField,
    center: [f64; 2],
    l2_initial: f64,
) -> Result<f64, OscillationError> {
    Ok(tail_integral(snapshot, center)?.value / l2_initial)
}

pub fn tail_estimates(
    history: &[ScalarField],
    center: [f64; 2],
    l2_initial: f64,
    alpha: f64,
    constant: f64,
) -> Result<Vec<TailEstimate>, OscillationError> {
    history
        .iter()
        .map(|s| {
            let t = s.time();
            let tail_value = tail_integral(s, center)?.value;
            let bound_basic = constant * l2_initial;
            let bound_improved = (t > 1.0).then(|| constant * (1.0 + t.ln()) * t.powf(-alpha) * l2_initial);
            let within = |b: f64| tail_value <= b * (1.0 + 1e-12);
            let pass = within(bound_basic) && bound_improved.is_none_or(within);
            Ok(TailEstimate {
                time: t,
                tail_value,
                bound_basic,
                bound_improved,
                pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn compactly_supported_field_has_no_tail() {
        let grid = Grid::periodic(128).unwrap();
        let c = [PI, PI];
        let bump = ScalarField::from_fn(grid, 0.0, |x| {
            let r2 = (x[0] - PI).powi(2) + (x[1] - PI).powi(2);
            if r2 < 0.81 {
                (1.0 - 1.0 / (1.0 - r2 / 0.81)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(tail_integral(&bump, c).unwrap().value, 0.0);
    }

    #[test]
    fn annulus_indicator_matches_polar_integral() {
        let grid = Grid::new(1024, 10.0).unwrap();
        let c = [5.0, 5.0];
        let ring = ScalarField::from_fn(grid, 0.0, |x| {
            let r = (x[0] - 5.0).hypot(x[1] - 5.0);
            if r > 1.0 && r < 4.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let t = tail_integral(&ring, c).unwrap();
        let exact = 2.0 * PI * 4f64.ln();
        assert!((t.value / exact - 1.0).abs() < 0.01, "{} vs {exact}", t.value);
        assert_eq!(t.truncation_radius, 5.0);
    }

    #[test]
    fn small_domain_rejected() {
        let grid = Grid::new(16, 3.0).unwrap();
        let f = ScalarField::zeros(grid, 0.0);
        assert!(matches!(
            tail_integral(&f, [0.0, 0.0]),
            Err(OscillationError::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn improved_bound_only_after_unit_time() {
        let grid = Grid::periodic(32).unwrap();
        let snaps: Vec<ScalarField> = [0.5, 2.0]
            .iter()
            .map(|&t| ScalarField::from_fn(grid, t, |x| (-t).exp() * x[0].sin()).unwrap())
            .collect();
        let est = tail_estimates(&snaps, [0.0, 0.0], 1.0, 1.0, 10.0).unwrap();
        assert!(est[0].bound_improved.is_none());
        assert!((est[1].bound_improved.unwrap() - 10.0 * (1.0 + 2f64.ln()) / 2.0).abs() < 1e-12);
        assert!(est.iter().all(|e| e.pass));
    }
}
