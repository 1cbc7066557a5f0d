//! Physical-space quadrature of the velocity kernel
//! `w(x) = c ∫ θ(y) (y − x)^⊥ / |y − x|³ dy`, `v^⊥ = (−v₂, v₁)`, split at
//! `|y| = 2` and `|y| = 2/ρ`:
//!
//! ```text
//!     w₁ = c ∫_{B₂} θ(y) K(y − x),       w₂ = c ∫_{B_{2/ρ} ∖ B₂} θ(y) K(y − x),
//!     w₃ = c ∫_{ℝ² ∖ B_{2/ρ}} θ(y) (K(y − x) − K(y)),   w̄ = c ∫_{ℝ² ∖ B_{2/ρ}} θ(y) K(y),
//! ```
//!
//! so that `w₁ + w₂ + w₃ = w − w̄`. Annuli use Gauss–Legendre panels in
//! `log r` and the trapezoid rule in angle; the principal value in `w₁` is
//! taken in polar coordinates around `x` after subtracting `θ(x)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::OscillationError;
use crate::seed;
use crate::spectral::{forward_transform, PointEvaluator, ScalarField, RIESZ_KERNEL_CONSTANT};

pub const KERNEL_CONSTANT: f64 = RIESZ_KERNEL_CONSTANT;

/// Frozen bound `C` with `|w₂| ≤ −C log ρ` and `|w₃| ≤ C ρ` on `B₁` for
/// admissible fields, set from [`calibrate_split_constant`] with margin.
pub const SPLIT_CONSTANT: f64 = 0.4;

const GL_ORDER: usize = 8;
const LOG_PANEL: f64 = 0.125;
const ANGLES: usize = 128;
const RADIAL_PANEL: f64 = 0.125;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n−1}(z).
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no longer than `panel`.
fn composite(a: f64, b: f64, panel: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(GL_ORDER);
    let panels = (((b - a) / panel).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * GL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

fn kernel(d: [f64; 2]) -> [f64; 2] {
    let r2 = d[0] * d[0] + d[1] * d[1];
    let r3 = r2 * r2.sqrt();
    [-d[1] / r3, d[0] / r3]
}

/// Nodes and area weights for the annulus `r₀ ≤ |y| < r₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRule {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl PolarRule {
    pub fn annulus(r0: f64, r1: f64) -> Self {
        if !(r1 > r0) {
            return Self {
                nodes: Vec::new(),
                weights: Vec::new(),
            };
        }
        let radial = composite(r0.ln(), r1.ln(), LOG_PANEL);
        let dphi = 2.0 * PI / ANGLES as f64;
        let mut nodes = Vec::with_capacity(radial.len() * ANGLES);
        let mut weights = Vec::with_capacity(radial.len() * ANGLES);
        for &(u, wu) in &radial {
            let r = u.exp();
            for a in 0..ANGLES {
                let phi = (a as f64 + 0.5) * dphi;
                nodes.push([r * phi.cos(), r * phi.sin()]);
                weights.push(r * r * wu * dphi);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `c Σ q_j K(y_j − x)` for per-node values `q_j` (weights applied here).
    fn apply(&self, values: &[f64], x: [f64; 2], subtract_origin: bool) -> [f64; 2] {
        let mut acc = [0.0; 2];
        for ((y, w), v) in self.nodes.iter().zip(&self.weights).zip(values) {
            let q = w * v;
            let k = kernel([y[0] - x[0], y[1] - x[1]]);
            if subtract_origin {
                let k0 = kernel(*y);
                acc[0] += q * (k[0] - k0[0]);
                acc[1] += q * (k[1] - k0[1]);
            } else {
                acc[0] += q * k[0];
                acc[1] += q * k[1];
            }
        }
        [KERNEL_CONSTANT * acc[0], KERNEL_CONSTANT * acc[1]]
    }
}

/// Principal-value integral over `B₂` at `x` (`|x| < 2`) for a field given
/// as a batch evaluator.
fn inner_velocity(field: &dyn Fn(&[[f64; 2]]) -> Vec<f64>, x: [f64; 2]) -> [f64; 2] {
    let theta_x = field(&[x])[0];
    let dphi = 2.0 * PI / ANGLES as f64;
    let mut pts = Vec::new();
    let mut meta = Vec::new();
    for a in 0..ANGLES {
        let phi = (a as f64 + 0.5) * dphi;
        let e = [phi.cos(), phi.sin()];
        let xe = x[0] * e[0] + x[1] * e[1];
        let smax = -xe + (xe * xe + 4.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
        for (s, ws) in composite(0.0, smax, RADIAL_PANEL) {
            pts.push([x[0] + s * e[0], x[1] + s * e[1]]);
            meta.push((a, s, ws));
        }
    }
    let vals = field(&pts);
    let mut radial = vec![0.0; ANGLES];
    for ((a, s, ws), v) in meta.into_iter().zip(vals) {
        radial[a] += ws * (v - theta_x) / s;
    }
    let mut acc = [0.0; 2];
    for (a, rad) in radial.iter().enumerate() {
        let phi = (a as f64 + 0.5) * dphi;
        let e = [phi.cos(), phi.sin()];
        let xe = x[0] * e[0] + x[1] * e[1];
        let smax = -xe + (xe * xe + 4.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
        let total = rad + theta_x * smax.ln();
        // e^⊥ = (−sin φ, cos φ).
        acc[0] += -e[1] * total * dphi;
        acc[1] += e[0] * total * dphi;
    }
    [KERNEL_CONSTANT * acc[0], KERNEL_CONSTANT * acc[1]]
}

/// The four pieces at a set of points (offsets from `center`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySplit {
    pub points: Vec<[f64; 2]>,
    pub w1: Vec<[f64; 2]>,
    pub w2: Vec<[f64; 2]>,
    pub w3: Vec<[f64; 2]>,
    pub w_bar: [f64; 2],
    pub truncation_radius: f64,
    /// `2/ρ` exceeds the truncation radius, so `w₂` is cut short and
    /// `w₃ = w̄ = 0`.
    pub truncated: bool,
}

fn split_with(
    field: &(dyn Fn(&[[f64; 2]]) -> Vec<f64> + Sync),
    rho: f64,
    truncation_radius: f64,
    points: &[[f64; 2]],
) -> Result<VelocitySplit, OscillationError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(OscillationError::InvalidRho(rho));
    }
    let outer = 2.0 / rho;
    let truncated = outer > truncation_radius;
    let annulus = PolarRule::annulus(2.0, outer.min(truncation_radius));
    let far = PolarRule::annulus(outer, truncation_radius);
    let a_vals = field(&annulus.nodes);
    let f_vals = field(&far.nodes);
    let w_bar = far.apply(&f_vals, [0.0, 0.0], false);
    let rows: Vec<([f64; 2], [f64; 2], [f64; 2])> = points
        .par_iter()
        .map(|&x| {
            (
                inner_velocity(field, x),
                annulus.apply(&a_vals, x, false),
                far.apply(&f_vals, x, true),
            )
        })
        .collect();
    Ok(VelocitySplit {
        points: points.to_vec(),
        w1: rows.iter().map(|r| r.0).collect(),
        w2: rows.iter().map(|r| r.1).collect(),
        w3: rows.iter().map(|r| r.2).collect(),
        w_bar,
        truncation_radius,
        truncated,
    })
}

/// Split the velocity of a periodic field around `center` at the given
/// offsets (each inside `B₁`). Integrals stop at the inscribed radius of
/// the fundamental domain.
pub fn split_velocity(
    theta: &ScalarField,
    rho: f64,
    center: [f64; 2],
    offsets: &[[f64; 2]],
) -> Result<VelocitySplit, OscillationError> {
    let eval = PointEvaluator::new(&forward_transform(theta)?, 1e-14);
    let field = |pts: &[[f64; 2]]| -> Vec<f64> {
        pts.par_iter()
            .map(|p| eval.eval([center[0] + p[0], center[1] + p[1]]))
            .collect()
    };
    split_with(&field, rho, 0.5 * theta.grid().side_length(), offsets)
}

/// `w₂ + w₃` of a time-dependent field on `[t₀, t₁]`, with the field values
/// at the quadrature nodes interpolated in time through Chebyshev knots.
pub struct SlowVelocity {
    knots: Vec<f64>,
    bary: Vec<f64>,
    annulus: PolarRule,
    far: PolarRule,
    annulus_values: Vec<Vec<f64>>,
    far_values: Vec<Vec<f64>>,
}

/// Values of a field at a batch of points and one time.
pub type PointSampler<'a> = dyn Fn(&[[f64; 2]], f64) -> Vec<f64> + 'a;

impl SlowVelocity {
    /// `inner` is 2; the annulus ends at `outer` (capped at the truncation
    /// radius) and the far piece, with the `K(y)` subtraction, covers the rest.
    pub fn build(
        field: &PointSampler<'_>,
        t0: f64,
        t1: f64,
        outer: f64,
        truncation_radius: f64,
        knot_count: usize,
    ) -> Self {
        let n = knot_count.max(2) - 1;
        let knots: Vec<f64> = (0..=n)
            .map(|l| 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * (PI * l as f64 / n as f64).cos())
            .collect();
        let bary: Vec<f64> = (0..=n)
            .map(|l| {
                let s = if l % 2 == 0 { 1.0 } else { -1.0 };
                if l == 0 || l == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let annulus = PolarRule::annulus(2.0, outer.min(truncation_radius));
        let far = PolarRule::annulus(outer, truncation_radius);
        let annulus_values = knots.iter().map(|&t| field(&annulus.nodes, t)).collect();
        let far_values = knots.iter().map(|&t| field(&far.nodes, t)).collect();
        Self {
            knots,
            bary,
            annulus,
            far,
            annulus_values,
            far_values,
        }
    }

    fn weights(&self, t: f64) -> Vec<f64> {
        if let Some(l) = self.knots.iter().position(|&k| k == t) {
            let mut w = vec![0.0; self.knots.len()];
            w[l] = 1.0;
            return w;
        }
        let raw: Vec<f64> = self.knots.iter().zip(&self.bary).map(|(k, b)| b / (t - k)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / s).collect()
    }

    fn combine(values: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values[0].len()];
        for (row, &wl) in values.iter().zip(w) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += wl * v;
            }
        }
        out
    }

    /// `(w₂, w₃)` at `(x, t)`.
    pub fn pieces(&self, x: [f64; 2], t: f64) -> ([f64; 2], [f64; 2]) {
        let w = self.weights(t);
        let a = Self::combine(&self.annulus_values, &w);
        let f = Self::combine(&self.far_values, &w);
        (self.annulus.apply(&a, x, false), self.far.apply(&f, x, true))
    }

    pub fn eval(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (a, b) = self.pieces(x, t);
        [a[0] + b[0], a[1] + b[1]]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn node_count(&self) -> usize {
        self.annulus.len() + self.far.len()
    }
}

/// `θ(y) = s(y) · e(|y|)` with `|s| ≤ 1` a random sum of six plane waves of
/// wavenumber in `[0.3, 2]`, `e = 1` on `B₁` and `e = 2|y|^{2δ}` outside:
/// the extremal envelope allowed at the start of an iteration step.
pub fn admissible_field(rng: &mut impl Rng, delta: f64) -> impl Fn([f64; 2]) -> f64 + Sync + Send + Clone {
    let waves: Vec<(f64, [f64; 2], f64)> = (0..6)
        .map(|_| {
            let k = rng.gen_range(0.3..2.0);
            let dir = rng.gen_range(0.0..2.0 * PI);
            (
                rng.gen_range(0.2..1.0),
                [k * dir.cos(), k * dir.sin()],
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w.0).sum();
    move |y: [f64; 2]| {
        let s: f64 = waves
            .iter()
            .map(|(a, k, p)| a * (k[0] * y[0] + k[1] * y[1] + p).cos())
            .sum::<f64>()
            / total;
        let r = y[0].hypot(y[1]);
        s * if r <= 1.0 { 1.0 } else { 2.0 * r.powf(2.0 * delta) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCalibration {
    /// `max(sup|w₂| / (−log ρ), sup|w₃| / ρ)` over the family.
    pub constant: f64,
    pub w2_ratio: f64,
    pub w3_ratio: f64,
    pub samples: usize,
}

/// Sweep `count` admissible fields per `(ρ, δ)` pair, measuring `sup_{B₁}`
/// of `|w₂|` and `|w₃|` on a lattice of spacing 1/4 (far integrals to `64/ρ`).
pub fn calibrate_split_constant(
    seed: u64,
    count: usize,
    rhos: &[f64],
    deltas: &[f64],
) -> Result<SplitCalibration, OscillationError> {
    let mut lattice = Vec::new();
    for j in -4..=4 {
        for i in -4..=4 {
            let x = [i as f64 * 0.25, j as f64 * 0.25];
            if x[0].hypot(x[1]) <= 1.0 {
                lattice.push(x);
            }
        }
    }
    let (mut r2, mut r3) = (0.0_f64, 0.0_f64);
    let mut samples = 0;
    for &rho in rhos {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(OscillationError::InvalidRho(rho));
        }
        let annulus = PolarRule::annulus(2.0, 2.0 / rho);
        let far = PolarRule::annulus(2.0 / rho, 64.0 / rho);
        for &delta in deltas {
            for i in 0..count {
                let mut rng = seed::rng(seed, "split-calibration", samples as u64 + i as u64);
                let f = admissible_field(&mut rng, delta);
                let a: Vec<f64> = annulus.nodes.iter().map(|&y| f(y)).collect();
                let b: Vec<f64> = far.nodes.iter().map(|&y| f(y)).collect();
                for &x in &lattice {
                    let w2 = annulus.apply(&a, x, false);
                    let w3 = far.apply(&b, x, true);
                    r2 = r2.max(w2[0].hypot(w2[1]) / -rho.ln());
                    r3 = r3.max(w3[0].hypot(w3[1]) / rho);
                }
            }
            samples += count;
        }
    }
    Ok(SplitCalibration {
        constant: r2.max(r3),
        w2_ratio: r2,
        w3_ratio: r3,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{riesz_velocity, Grid, SpectralField};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let int = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(14) - 2.0 / 15.0).abs() < 1e-14);
        assert!(int(7).abs() < 1e-15);
    }

    #[test]
    fn annulus_rule_has_exact_area() {
        let r = PolarRule::annulus(2.0, 32.0);
        let area: f64 = r.weights.iter().sum();
        assert!((area / (PI * (1024.0 - 4.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn field_supported_in_b2_has_only_inner_part() {
        let grid = Grid::periodic(128).unwrap();
        let c = [PI, PI];
        let theta = ScalarField::from_fn(grid, 0.0, |x| {
            let r2 = (x[0] - PI).powi(2) + (x[1] - PI).powi(2);
            if r2 < 1.0 {
                (1.0 - 1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let split = split_velocity(&theta, 0.5, c, &[[0.3, 0.0]]).unwrap();
        // The interpolant of a compactly supported bump leaks at round-off.
        assert!(split.w2[0][0].hypot(split.w2[0][1]) < 1e-6);
        assert!(split.w3[0][0].hypot(split.w3[0][1]) < 1e-6);
        assert!(split.w_bar[0].hypot(split.w_bar[1]) < 1e-6);
        // By symmetry the velocity at (0.3, 0) is vertical.
        assert!(split.w1[0][1].abs() > 1e-3 && split.w1[0][0].abs() < 1e-8);
    }

    #[test]
    fn pieces_sum_to_spectral_velocity() {
        let grid = Grid::periodic(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut spec = SpectralField::zeros(grid);
        let idx = |m: i64| m.rem_euclid(64) as usize;
        for a in -5i64..=5 {
            for b in 0i64..=5 {
                let m2 = a * a + b * b;
                if (b == 0 && a <= 0) || !(4..=25).contains(&m2) {
                    continue;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                spec.coefficients_mut()[grid.index(idx(a), idx(b))] = c;
                spec.coefficients_mut()[grid.index(idx(-a), idx(-b))] = c.conj();
            }
        }
        let theta = crate::spectral::inverse_transform(&spec, 0.0).unwrap();
        let w = riesz_velocity(&theta).unwrap();
        let c = [PI, PI];
        let mut offsets = Vec::new();
        let mut want = Vec::new();
        for j in 0..64 {
            for i in 0..64 {
                let d = grid.min_image(grid.coordinates(i, j), c);
                if d[0].hypot(d[1]) < 1.0 && (i + j) % 3 == 0 {
                    offsets.push(d);
                    want.push(w.at(i, j));
                }
            }
        }
        let split = split_velocity(&theta, 0.8, c, &offsets).unwrap();
        assert!(!split.truncated);
        let (mut err, mut norm) = (0.0, 0.0);
        for (k, want_k) in want.iter().enumerate() {
            for (a, &w) in want_k.iter().enumerate() {
                let sum = split.w1[k][a] + split.w2[k][a] + split.w3[k][a];
                let target = w - split.w_bar[a];
                err += (sum - target).powi(2);
                norm += target.powi(2);
            }
        }
        let rel = (err / norm).sqrt();
        assert!(rel < 0.02, "relative L² error {rel}");
    }

    #[test]
    fn rho_must_be_below_one() {
        let grid = Grid::periodic(16).unwrap();
        let theta = ScalarField::zeros(grid, 0.0);
        assert!(matches!(
            split_velocity(&theta, 1.0, [0.0; 2], &[]),
            Err(OscillationError::InvalidRho(_))
        ));
    }

    #[test]
    fn slow_velocity_interpolates_polynomials_in_time() {
        let field = |pts: &[[f64; 2]], t: f64| pts.iter().map(|y| (1.0 + t * t) * (0.5 * y[0]).cos()).collect();
        let sv = SlowVelocity::build(&field, 0.8, 1.0, 8.0, 8.0, 5);
        let frozen = |pts: &[[f64; 2]], _t: f64| pts.iter().map(|y| (0.5 * y[0]).cos()).collect();
        let base = SlowVelocity::build(&frozen, 0.8, 1.0, 8.0, 8.0, 5);
        let x = [0.2, -0.1];
        let (a, b) = (sv.eval(x, 0.9), base.eval(x, 0.9));
        assert!((a[0] - 1.81 * b[0]).abs() < 1e-12 && (a[1] - 1.81 * b[1]).abs() < 1e-12);
    }

    #[test]
    fn frozen_split_constant_covers_calibration() {
        let cal = calibrate_split_constant(7, 4, &[1.0 / 16.0, 1.0 / 64.0], &[0.05, 0.15]).unwrap();
        assert!(cal.constant > 0.0);
        assert!(cal.constant <= SPLIT_CONSTANT, "{cal:?}");
    }
}
