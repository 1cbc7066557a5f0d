//! Flow-following path `V(1) = 0`, `V̇(t) = M w_slow(V(t), t)`, integrated
//! backward with classical RK4.

use serde::{Deserialize, Serialize};

use super::OscillationError;

/// Default step count over `[1 − ρ^α, 1]`.
pub const FLOW_STEPS: usize = 64;

/// `V` sampled at the RK4 nodes together with `V̇`, interpolated by cubic
/// Hermite polynomials in between. Times increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecenterPath {
    pub times: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub rates: Vec<[f64; 2]>,
}

impl RecenterPath {
    pub fn constant(v: [f64; 2], t0: f64, t1: f64) -> Self {
        Self {
            times: vec![t0, t1],
            points: vec![v, v],
            rates: vec![[0.0; 2]; 2],
        }
    }

    /// `V(t)`, held constant outside the sampled interval.
    pub fn at(&self, t: f64) -> [f64; 2] {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return self.points[0];
        }
        if t >= self.times[last] {
            return self.points[last];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let w = [
            2.0 * s3 - 3.0 * s2 + 1.0,
            h * (s3 - 2.0 * s2 + s),
            -2.0 * s3 + 3.0 * s2,
            h * (s3 - s2),
        ];
        std::array::from_fn(|a| {
            w[0] * self.points[i][a]
                + w[1] * self.rates[i][a]
                + w[2] * self.points[i + 1][a]
                + w[3] * self.rates[i + 1][a]
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max)
    }
}

/// Integrate `V̇ = M w(V, t)` from `V(1) = 0` back to `t_start` in `steps`
/// equal RK4 steps.
pub fn recenter_flow(
    w: &dyn Fn([f64; 2], f64) -> [f64; 2],
    m: f64,
    t_start: f64,
    steps: usize,
) -> Result<RecenterPath, OscillationError> {
    if !(t_start < 1.0) || steps == 0 {
        return Err(OscillationError::InvalidConfig(format!(
            "flow from {t_start} in {steps} steps"
        )));
    }
    let f = |v: [f64; 2], t: f64| -> Result<[f64; 2], OscillationError> {
        let u = w(v, t);
        if !(u[0].is_finite() && u[1].is_finite()) {
            return Err(OscillationError::EvaluatorFailure(t));
        }
        Ok([m * u[0], m * u[1]])
    };
    let h = -(1.0 - t_start) / steps as f64;
    let mut t = 1.0;
    let mut v = [0.0; 2];
    let mut times = vec![t];
    let mut points = vec![v];
    let mut rates = vec![f(v, t)?];
    let add = |v: [f64; 2], k: [f64; 2], c: f64| [v[0] + c * k[0], v[1] + c * k[1]];
    for s in 0..steps {
        let k1 = *rates.last().unwrap();
        let k2 = f(add(v, k1, 0.5 * h), t + 0.5 * h)?;
        let k3 = f(add(v, k2, 0.5 * h), t + 0.5 * h)?;
        let k4 = f(add(v, k3, h), t + h)?;
        v = std::array::from_fn(|a| v[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]));
        t = if s + 1 == steps {
            t_start
        } else {
            1.0 + (s + 1) as f64 * h
        };
        times.push(t);
        points.push(v);
        rates.push(f(v, t)?);
    }
    times.reverse();
    points.reverse();
    rates.reverse();
    Ok(RecenterPath { times, points, rates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_stays_at_origin() {
        let p = recenter_flow(&|_, _| [0.0, 0.0], 3.0, 0.8, 16).unwrap();
        assert_eq!(p.max_norm(), 0.0);
    }

    #[test]
    fn constant_field_is_linear_in_time() {
        let p = recenter_flow(&|_, _| [0.7, 0.0], 2.0, 0.5, 8).unwrap();
        for t in [0.5, 0.61, 0.9, 1.0] {
            let v = p.at(t);
            assert!((v[0] - 1.4 * (t - 1.0)).abs() < 1e-14);
            assert_eq!(v[1], 0.0);
        }
    }

    #[test]
    fn halving_the_step_changes_little() {
        let w = |v: [f64; 2], t: f64| [(v[1] + t).sin(), (2.0 * v[0]).cos() * t];
        let a = recenter_flow(&w, 1.5, 0.9, FLOW_STEPS).unwrap();
        let b = recenter_flow(&w, 1.5, 0.9, 2 * FLOW_STEPS).unwrap();
        let (pa, pb) = (a.points[0], b.points[0]);
        assert!((pa[0] - pb[0]).hypot(pa[1] - pb[1]) < 1e-8);
    }

    #[test]
    fn non_finite_velocity_is_reported() {
        let r = recenter_flow(&|_, _| [f64::NAN, 0.0], 1.0, 0.5, 4);
        assert!(matches!(r, Err(OscillationError::EvaluatorFailure(_))));
    }
}
