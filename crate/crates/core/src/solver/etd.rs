use num_complex::Complex64;

use super::SolverConfig;
use crate::spectral::{Grid, SpectralField};

const TAYLOR_RADIUS: f64 = 1.0;
const TAYLOR_TERMS: usize = 30;

/// `Σ_{m≥0} z^m / (m + k)!`, i.e. `φ_k(z)`.
fn phi_taylor(z: f64, k: u32) -> f64 {
    let mut term = 1.0;
    for j in 1..=k {
        term /= j as f64;
    }
    let mut sum = term;
    for m in 1..TAYLOR_TERMS {
        term *= z / (m as f64 + k as f64);
        sum += term;
    }
    sum
}

/// `φ₁(z) = (e^z − 1)/z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < TAYLOR_RADIUS {
        phi_taylor(z, 1)
    } else {
        z.exp_m1() / z
    }
}

/// `φ₂(z) = (e^z − 1 − z)/z²`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < TAYLOR_RADIUS {
        phi_taylor(z, 2)
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `φ₃(z) = (e^z − 1 − z − z²/2)/z³`.
pub fn phi3(z: f64) -> f64 {
    if z.abs() < TAYLOR_RADIUS {
        phi_taylor(z, 3)
    } else {
        (z.exp_m1() - z - 0.5 * z * z) / (z * z * z)
    }
}

/// Per-mode ETD weights for a fixed step `h` and linear symbol `L = −|k|^α`.
pub(super) struct Coefficients {
    pub linear: Vec<f64>,
    e: Vec<f64>,
    e_half: Vec<f64>,
    /// `(h/2) φ₁(Lh/2)`
    q_half: Vec<f64>,
    /// `h φ₁(Lh)`
    h_phi1: Vec<f64>,
    /// `h φ₂(Lh)`
    h_phi2: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl Coefficients {
    pub fn new(grid: &Grid, config: &SolverConfig, h: f64) -> Self {
        let n = grid.n();
        let len = grid.len();
        let mut c = Coefficients {
            linear: vec![0.0; len],
            e: vec![0.0; len],
            e_half: vec![0.0; len],
            q_half: vec![0.0; len],
            h_phi1: vec![0.0; len],
            h_phi2: vec![0.0; len],
            f1: vec![0.0; len],
            f2: vec![0.0; len],
            f3: vec![0.0; len],
        };
        for j in 0..n {
            for i in 0..n {
                let k = grid.index(i, j);
                let [k1, k2] = grid.wavevector(i, j);
                let l = if config.dissipation {
                    -(k1.hypot(k2)).powf(config.alpha)
                } else {
                    0.0
                };
                let z = l * h;
                let (p1, p2, p3) = (phi1(z), phi2(z), phi3(z));
                c.linear[k] = l;
                c.e[k] = z.exp();
                c.e_half[k] = (0.5 * z).exp();
                c.q_half[k] = 0.5 * h * phi1(0.5 * z);
                c.h_phi1[k] = h * p1;
                c.h_phi2[k] = h * p2;
                c.f1[k] = h * (p1 - 3.0 * p2 + 4.0 * p3);
                c.f2[k] = h * 2.0 * (p2 - 2.0 * p3);
                c.f3[k] = h * (4.0 * p3 - p2);
            }
        }
        c
    }
}

fn combine(len: usize, f: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    (0..len).map(f).collect()
}

fn field(like: &SpectralField, data: Vec<Complex64>) -> SpectralField {
    SpectralField::new(*like.grid(), data).expect("length preserved")
}

/// Second-order ETD Runge–Kutta (Cox–Matthews ETD2RK).
pub(super) fn rk2(
    u: &SpectralField,
    nu: SpectralField,
    c: &Coefficients,
    nonlinear: impl Fn(&SpectralField) -> SpectralField,
) -> SpectralField {
    let (uc, n0) = (u.coefficients(), nu.coefficients());
    let a = field(u, combine(uc.len(), |k| c.e[k] * uc[k] + c.h_phi1[k] * n0[k]));
    let na = nonlinear(&a);
    let (ac, n1) = (a.coefficients(), na.coefficients());
    field(u, combine(uc.len(), |k| ac[k] + c.h_phi2[k] * (n1[k] - n0[k])))
}

/// Fourth-order ETD Runge–Kutta (Cox–Matthews ETDRK4).
pub(super) fn rk4(
    u: &SpectralField,
    nu: SpectralField,
    c: &Coefficients,
    nonlinear: impl Fn(&SpectralField) -> SpectralField,
) -> SpectralField {
    let uc = u.coefficients();
    let len = uc.len();
    let n0 = nu.coefficients();
    let a = field(u, combine(len, |k| c.e_half[k] * uc[k] + c.q_half[k] * n0[k]));
    let na = nonlinear(&a);
    let b = field(
        u,
        combine(len, |k| c.e_half[k] * uc[k] + c.q_half[k] * na.coefficients()[k]),
    );
    let nb = nonlinear(&b);
    let cc = field(
        u,
        combine(len, |k| {
            c.e_half[k] * a.coefficients()[k] + c.q_half[k] * (2.0 * nb.coefficients()[k] - n0[k])
        }),
    );
    let nc = nonlinear(&cc);
    field(
        u,
        combine(len, |k| {
            c.e[k] * uc[k]
                + c.f1[k] * n0[k]
                + c.f2[k] * (na.coefficients()[k] + nb.coefficients()[k])
                + c.f3[k] * nc.coefficients()[k]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_are_continuous_at_the_switch() {
        for f in [phi1 as fn(f64) -> f64, phi2, phi3] {
            let below = f(-1.0 + 1e-12);
            let above = f(-1.0 - 1e-12);
            assert!((below - above).abs() < 1e-12);
        }
        assert!((phi1(0.0) - 1.0).abs() < 1e-16);
        assert!((phi2(0.0) - 0.5).abs() < 1e-16);
        assert!((phi3(0.0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((phi1(-3.0) - (1.0 - (-3.0f64).exp()) / 3.0).abs() < 1e-15);
    }
}
