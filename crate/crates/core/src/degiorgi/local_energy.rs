//! Local energy inequality for the truncation `u₊ = (u − λ)₊` of the
//! extension `u` of θ, with a cutoff `η` supported in `B₂*`:
//!
//! ```text
//!     G + F(t₂) ≤ F(t₁) + C₁ (T₁ + T₂),
//!     G  = ∫_{t₁}^{t₂} ∫ z^ε |∇(η u₊)|²,      F(t) = ∫ (η θ₊)²(t),
//!     T₁ = ∫_{t₁}^{t₂} ∫ (|∇η| θ₊)²,          T₂ = ∫_{t₁}^{t₂} ∫ z^ε (|∇η| u₊)².
//! ```
//!
//! x-integrals are grid sums (spectral accuracy for periodic data), z
//! integrals are trapezoid in `s = z^{1−ε}/(1−ε)` and time integrals are
//! trapezoid over the history samples. The quadrature budget is the change
//! in every term when every other level and time sample is dropped.

use serde::{Deserialize, Serialize};

use super::DeGiorgiError;
use crate::extension::{extend, Cutoff, ExtensionField, VerticalProfile};
use crate::spectral::{Grid, ScalarField, VelocityField};

const TIME_MATCH: f64 = 1e-9;

/// A cutoff with the center of the ball `B₂` it must live in.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCutoff {
    pub center: [f64; 2],
    pub cutoff: Cutoff,
}

impl LocalCutoff {
    /// `η = b(|x − c|/r) b(z/r)` with the smooth bump `b(s) = exp(1 − 1/(1 − s²))`.
    pub fn bump(grid: Grid, center: [f64; 2], radius: f64) -> Result<Self, DeGiorgiError> {
        if !(radius > 0.0 && radius <= 2.0) {
            return Err(DeGiorgiError::CutoffSupport { support: radius });
        }
        let profile = VerticalProfile::Bump { support: radius };
        let horizontal = ScalarField::from_fn(grid, 0.0, |x| {
            let d = grid.min_image(x, center);
            profile.value(d[0].hypot(d[1]))
        })?;
        Ok(Self {
            center,
            cutoff: Cutoff {
                horizontal,
                vertical: profile,
            },
        })
    }
}

/// `count + 1` heights in `[0, z_top]`, uniform in `z^{1−ε}/(1−ε)`.
pub fn u_uniform_levels(z_top: f64, count: usize, epsilon: f64) -> Vec<f64> {
    let p = 1.0 - epsilon;
    (0..=count)
        .map(|k| (k as f64 / count as f64 * z_top.powf(p)).powf(1.0 / p))
        .collect()
}

/// Extensions of every snapshot to the same levels.
pub fn extend_history(
    snapshots: &[ScalarField],
    z_levels: &[f64],
    epsilon: f64,
) -> Result<Vec<ExtensionField>, DeGiorgiError> {
    snapshots
        .iter()
        .map(|s| extend(s, z_levels, epsilon).map_err(DeGiorgiError::from))
        .collect()
}

/// Integrals of the inequality without the constant, with the change of
/// each under halved resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergyTerms {
    pub dissipation: f64,
    pub final_mass: f64,
    pub initial_mass: f64,
    pub trace_gradient: f64,
    pub bulk_gradient: f64,
    pub dissipation_error: f64,
    pub trace_gradient_error: f64,
    pub bulk_gradient_error: f64,
    /// `sup_t ‖w(t)‖_{L^{4/α}(B₂)}`.
    pub velocity_norm: f64,
}

impl LocalEnergyTerms {
    /// Smallest constant for which the inequality holds without budget;
    /// zero when the right side already dominates.
    pub fn required_constant(&self) -> f64 {
        let excess = self.dissipation + self.final_mass - self.initial_mass;
        let t = self.trace_gradient + self.bulk_gradient;
        if excess <= 0.0 {
            0.0
        } else if t > 0.0 {
            excess / t
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergyReport {
    pub terms: LocalEnergyTerms,
    pub c1: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub budget: f64,
    pub pass: bool,
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

/// Every other index, always keeping the last.
fn coarse_indices(len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(2).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

fn trapezoid_pair(x: &[f64], f: &[f64]) -> (f64, f64) {
    let fine = trapezoid(x, f);
    if x.len() < 3 {
        return (fine, fine.abs());
    }
    let idx = coarse_indices(x.len());
    let xc: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let fc: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
    (fine, (fine - trapezoid(&xc, &fc)).abs())
}

/// Per level densities `(G, T₂)` in the variable `s`, and the fine/coarse
/// z-integrals.
struct Slice {
    mass: f64,
    trace_gradient: f64,
    dissipation: (f64, f64),
    bulk: (f64, f64),
}

fn slice(
    ext: &ExtensionField,
    cutoff: &Cutoff,
    grad_eta: &(Vec<f64>, Vec<f64>),
    level: f64,
) -> Result<Slice, DeGiorgiError> {
    let grid = *ext.grid();
    let eps = ext.epsilon();
    let cell = grid.spacing().powi(2);
    let eta = cutoff.horizontal.values();
    let (ex, ey) = grad_eta;
    let plus = |v: f64| (v - level).max(0.0);

    let base = ext.level(0);
    let mut mass = 0.0;
    let mut trace_gradient = 0.0;
    for k in 0..grid.len() {
        let p = plus(base[k]);
        mass += (eta[k] * p).powi(2);
        trace_gradient += (ex[k] * ex[k] + ey[k] * ey[k]) * p * p;
    }

    let mut g = Vec::with_capacity(ext.z_levels().len());
    let mut t = Vec::with_capacity(ext.z_levels().len());
    for (l, &z) in ext.z_levels().iter().enumerate() {
        let (v, dv) = (cutoff.vertical.value(z), cutoff.vertical.derivative(z));
        let u = ext.level(l);
        if (v == 0.0 && dv == 0.0) || u.iter().all(|&x| x <= level) {
            g.push(0.0);
            t.push(0.0);
            continue;
        }
        let dz = ext.weighted_z_derivative(z)?;
        let (ux, uy) = ext.horizontal_gradient(z)?;
        let zeps = if eps == 0.0 { 1.0 } else { z.powf(eps) };
        let (mut gs, mut ts) = (0.0, 0.0);
        for k in 0..grid.len() {
            let p = plus(u[k]);
            let on = if u[k] > level { 1.0 } else { 0.0 };
            let e = eta[k] * v;
            // z^ε ∂_z(η u₊) and ∇ₓ(η u₊).
            let fz = eta[k] * dv * zeps * p + e * on * dz.values()[k];
            let fx = v * ex[k] * p + e * on * ux.values()[k];
            let fy = v * ey[k] * p + e * on * uy.values()[k];
            gs += fz * fz + zeps * zeps * (fx * fx + fy * fy);
            let grad2 = v * v * (ex[k] * ex[k] + ey[k] * ey[k]) + (eta[k] * dv).powi(2);
            ts += zeps * zeps * grad2 * p * p;
        }
        g.push(gs * cell);
        t.push(ts * cell);
    }
    let s: Vec<f64> = ext.z_levels().iter().map(|z| z.powf(1.0 - eps) / (1.0 - eps)).collect();
    Ok(Slice {
        mass: mass * cell,
        trace_gradient: trace_gradient * cell,
        dissipation: trapezoid_pair(&s, &g),
        bulk: trapezoid_pair(&s, &t),
    })
}

fn velocity_norm(w: &VelocityField, center: [f64; 2], alpha: f64) -> f64 {
    let grid = *w.grid();
    let p = 4.0 / alpha;
    let n = grid.n();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let d = grid.min_image(grid.coordinates(i, j), center);
            if d[0].hypot(d[1]) < 2.0 {
                let [a, b] = w.at(i, j);
                acc += a.hypot(b).powf(p);
            }
        }
    }
    (acc * grid.spacing().powi(2)).powf(1.0 / p)
}

fn index_of(times: &[f64], t: f64) -> Option<usize> {
    times
        .iter()
        .position(|&s| (s - t).abs() <= TIME_MATCH * t.abs().max(1.0))
}

/// Evaluate every integral over the history samples in `[t1, t2]`; both
/// endpoints must be sample times.
pub fn local_energy_terms(
    history: &[ExtensionField],
    velocity: &[VelocityField],
    cutoff: &LocalCutoff,
    level: f64,
    t1: f64,
    t2: f64,
) -> Result<LocalEnergyTerms, DeGiorgiError> {
    if history.len() != velocity.len() {
        return Err(DeGiorgiError::TimeGridMismatch(format!(
            "{} extension samples, {} velocity samples",
            history.len(),
            velocity.len()
        )));
    }
    for (h, w) in history.iter().zip(velocity) {
        if (h.time() - w.time()).abs() > TIME_MATCH * h.time().abs().max(1.0) {
            return Err(DeGiorgiError::TimeGridMismatch(format!(
                "t = {} against t = {}",
                h.time(),
                w.time()
            )));
        }
        if h.grid() != w.grid() || h.grid() != cutoff.cutoff.horizontal.grid() {
            return Err(crate::spectral::SpectralError::GridMismatch.into());
        }
    }
    let times: Vec<f64> = history.iter().map(|h| h.time()).collect();
    let (i1, i2) = match (index_of(&times, t1), index_of(&times, t2)) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return Err(DeGiorgiError::InvalidWindow { t1, t2 }),
    };
    let alpha = 1.0 - history[0].epsilon();
    let grad_eta = cutoff.cutoff.horizontal_gradient();
    let slices: Vec<Slice> = history[i1..=i2]
        .iter()
        .map(|h| slice(h, &cutoff.cutoff, &grad_eta, level))
        .collect::<Result<_, _>>()?;
    let ts = &times[i1..=i2];
    let series = |f: &dyn Fn(&Slice) -> f64| slices.iter().map(f).collect::<Vec<f64>>();
    let time_pair = |f: &dyn Fn(&Slice) -> f64| trapezoid_pair(ts, &series(f));

    let (dissipation, dt_g) = time_pair(&|s| s.dissipation.0);
    let (_, dz_g) = time_pair(&|s| s.dissipation.1);
    let (trace_gradient, dt_t1) = time_pair(&|s| s.trace_gradient);
    let (bulk_gradient, dt_t2) = time_pair(&|s| s.bulk.0);
    let (_, dz_t2) = time_pair(&|s| s.bulk.1);
    let velocity_norm = velocity[i1..=i2]
        .iter()
        .map(|w| velocity_norm(w, cutoff.center, alpha))
        .fold(0.0, f64::max);
    Ok(LocalEnergyTerms {
        dissipation,
        final_mass: slices.last().unwrap().mass,
        initial_mass: slices[0].mass,
        trace_gradient,
        bulk_gradient,
        dissipation_error: dt_g + dz_g,
        trace_gradient_error: dt_t1,
        bulk_gradient_error: dt_t2 + dz_t2,
        velocity_norm,
    })
}

impl LocalEnergyReport {
    pub fn from_terms(terms: LocalEnergyTerms, c1: f64) -> Self {
        let lhs = terms.dissipation + terms.final_mass;
        let rhs = terms.initial_mass + c1 * (terms.trace_gradient + terms.bulk_gradient);
        let budget = terms.dissipation_error + c1 * (terms.trace_gradient_error + terms.bulk_gradient_error);
        Self {
            terms,
            c1,
            lhs,
            rhs,
            budget,
            pass: lhs <= rhs + budget,
        }
    }
}

pub fn local_energy_check(
    history: &[ExtensionField],
    velocity: &[VelocityField],
    cutoff: &LocalCutoff,
    level: f64,
    t1: f64,
    t2: f64,
    c1: f64,
) -> Result<LocalEnergyReport, DeGiorgiError> {
    let terms = local_energy_terms(history, velocity, cutoff, level, t1, t2)?;
    Ok(LocalEnergyReport::from_terms(terms, c1))
}

/// `C₁ = max(1, 2 · max required constant)` over a calibration family.
pub fn calibrate_local_energy(family: &[LocalEnergyTerms]) -> Result<f64, DeGiorgiError> {
    if family.is_empty() {
        return Err(DeGiorgiError::EmptyFamily);
    }
    let need = family
        .iter()
        .map(LocalEnergyTerms::required_constant)
        .fold(0.0, f64::max);
    Ok((2.0 * need).max(1.0))
}
