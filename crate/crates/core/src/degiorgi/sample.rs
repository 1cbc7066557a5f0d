//! Functions on the half ball `B_r* = B_r × [0, r)` sampled on a tensor
//! grid, with centered-difference gradients.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::extension::ExtensionField;
use crate::spectral::{forward_transform, PointEvaluator};

/// Values of `w(x₁, x₂, z)` on an `n³` tensor grid covering
/// `[−r, r]² × [0, r]`, with trilinear interpolation of values and of the
/// finite-difference gradient.
#[derive(Debug, Clone)]
pub struct GriddedHalfBall {
    radius: f64,
    n: usize,
    values: Vec<f64>,
    gradient: Vec<[f64; 3]>,
}

impl GriddedHalfBall {
    pub fn sample(radius: f64, n: usize, f: impl Fn([f64; 3]) -> f64) -> Self {
        assert!(n >= 3, "need at least three nodes per axis");
        let hx = 2.0 * radius / (n - 1) as f64;
        let hz = radius / (n - 1) as f64;
        let mut values = vec![0.0; n * n * n];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let x = [-radius + i as f64 * hx, -radius + j as f64 * hx, k as f64 * hz];
                    values[(k * n + j) * n + i] = f(x);
                }
            }
        }
        Self::from_values(radius, n, values)
    }

    /// Restriction of an extension to `B_r*` around `center`; the extension
    /// is evaluated exactly per mode at each tensor-grid height.
    pub fn from_extension(ext: &ExtensionField, center: [f64; 2], radius: f64, n: usize) -> Self {
        let hx = 2.0 * radius / (n - 1) as f64;
        let hz = radius / (n - 1) as f64;
        let mut values = vec![0.0; n * n * n];
        for k in 0..n {
            let slice = ext.at_height(k as f64 * hz).expect("valid extension");
            let eval = PointEvaluator::new(&forward_transform(&slice).expect("finite"), 1e-14);
            for j in 0..n {
                for i in 0..n {
                    let x = [center[0] - radius + i as f64 * hx, center[1] - radius + j as f64 * hx];
                    values[(k * n + j) * n + i] = eval.eval(x);
                }
            }
        }
        Self::from_values(radius, n, values)
    }

    fn from_values(radius: f64, n: usize, values: Vec<f64>) -> Self {
        let hx = 2.0 * radius / (n - 1) as f64;
        let hz = radius / (n - 1) as f64;
        let at = |i: usize, j: usize, k: usize| values[(k * n + j) * n + i];
        // Centered differences inside, one-sided at the faces (z = 0 included).
        let diff = |lo: f64, mid: f64, hi: f64, idx: usize, h: f64| {
            if idx == 0 {
                (hi - mid) / h
            } else if idx == n - 1 {
                (mid - lo) / h
            } else {
                (hi - lo) / (2.0 * h)
            }
        };
        let mut gradient = vec![[0.0; 3]; n * n * n];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let c = at(i, j, k);
                    let gx = diff(at(i.saturating_sub(1), j, k), c, at((i + 1).min(n - 1), j, k), i, hx);
                    let gy = diff(at(i, j.saturating_sub(1), k), c, at(i, (j + 1).min(n - 1), k), j, hx);
                    let gz = diff(at(i, j, k.saturating_sub(1)), c, at(i, j, (k + 1).min(n - 1)), k, hz);
                    gradient[(k * n + j) * n + i] = [gx, gy, gz];
                }
            }
        }
        Self {
            radius,
            n,
            values,
            gradient,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn locate(&self, x: [f64; 3]) -> ([usize; 3], [f64; 3]) {
        let n = self.n;
        let scaled = [
            (x[0] + self.radius) / (2.0 * self.radius) * (n - 1) as f64,
            (x[1] + self.radius) / (2.0 * self.radius) * (n - 1) as f64,
            x[2] / self.radius * (n - 1) as f64,
        ];
        let mut idx = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = scaled[a].clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            idx[a] = i;
            frac[a] = s - i as f64;
        }
        (idx, frac)
    }

    fn trilinear<T: Copy>(&self, data: &[T], x: [f64; 3], zero: T, axpy: impl Fn(T, f64, T) -> T) -> T {
        let n = self.n;
        let ([i, j, k], [fx, fy, fz]) = self.locate(x);
        let mut acc = zero;
        for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
                    let w = wx * wy * wz;
                    if w != 0.0 {
                        acc = axpy(acc, w, data[((k + dk) * n + j + dj) * n + i + di]);
                    }
                }
            }
        }
        acc
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.trilinear(&self.values, x, 0.0, |a, w, v| a + w * v)
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        self.trilinear(&self.gradient, x, [0.0; 3], |a, w, g| {
            [a[0] + w * g[0], a[1] + w * g[1], a[2] + w * g[2]]
        })
    }

    /// `1 − w`, which swaps the roles of `{w ≤ 0}` and `{w ≥ 1}`.
    pub fn complement(&self) -> Self {
        Self {
            radius: self.radius,
            n: self.n,
            values: self.values.iter().map(|v| 1.0 - v).collect(),
            gradient: self.gradient.iter().map(|g| [-g[0], -g[1], -g[2]]).collect(),
        }
    }
}

/// Random trigonometric polynomial in `X = (x₁, x₂, z)` with integer modes
/// `|mᵢ| ≤ max_mode` on the scale of `B_r*`:
///
/// ```text
///     w(X) = 1/2 + Re Σ_m c_m e^{iπ m·X / r},   |c_m| ∝ 1/(1 + |m|²),
/// ```
///
/// rescaled so that the sum has root-mean-square `spread`.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    radius: f64,
    max_mode: i64,
    /// `c[(m₁ + M)(2M + 1)(M + 1) + (m₂ + M)(M + 1) + m₃]`, `m₃ ≥ 0`.
    coeffs: Vec<Complex64>,
    offset: f64,
}

impl TrigPolynomial {
    pub fn random(rng: &mut impl Rng, radius: f64, max_mode: i64, spread: f64) -> Self {
        let side = (2 * max_mode + 1) as usize;
        let depth = (max_mode + 1) as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); side * side * depth];
        for m1 in -max_mode..=max_mode {
            for m2 in -max_mode..=max_mode {
                for m3 in 0..=max_mode {
                    if (m1, m2, m3) == (0, 0, 0) {
                        continue;
                    }
                    let m2sum = (m1 * m1 + m2 * m2 + m3 * m3) as f64;
                    let a = rng.gen_range(-1.0..1.0) / (1.0 + m2sum);
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    let idx = ((m1 + max_mode) as usize * side + (m2 + max_mode) as usize) * depth + m3 as usize;
                    coeffs[idx] = Complex64::from_polar(a, phase);
                }
            }
        }
        // Mean square of Re Σ c e^{i·} is Σ |c|²/2.
        let rms = (coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / 2.0).sqrt();
        for c in &mut coeffs {
            *c *= spread / rms;
        }
        Self {
            radius,
            max_mode,
            coeffs,
            offset: 0.5,
        }
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let m = self.max_mode;
        let side = (2 * m + 1) as usize;
        let depth = (m + 1) as usize;
        let s = PI / self.radius;
        let mut acc = Complex64::new(0.0, 0.0);
        for m1 in -m..=m {
            for m2 in -m..=m {
                for m3 in 0..=m {
                    let c = self.coeffs[((m1 + m) as usize * side + (m2 + m) as usize) * depth + m3 as usize];
                    acc += c * Complex64::from_polar(1.0, s * (m1 as f64 * x[0] + m2 as f64 * x[1] + m3 as f64 * x[2]));
                }
            }
        }
        self.offset + acc.re
    }

    /// Values on the `n³` tensor grid of [`GriddedHalfBall`], by successive
    /// contraction over `m₃`, `m₂`, `m₁`.
    pub fn gridded(&self, n: usize) -> GriddedHalfBall {
        let m = self.max_mode;
        let side = (2 * m + 1) as usize;
        let depth = (m + 1) as usize;
        let r = self.radius;
        let s = PI / r;
        let hx = 2.0 * r / (n - 1) as f64;
        let hz = r / (n - 1) as f64;
        let phase = |mode: i64, x: f64| Complex64::from_polar(1.0, s * mode as f64 * x);
        // a[k][m1][m2] = Σ_{m3} c e^{i s m3 z_k}
        let mut a = vec![Complex64::new(0.0, 0.0); n * side * side];
        for k in 0..n {
            let z = k as f64 * hz;
            let ez: Vec<Complex64> = (0..=m).map(|m3| phase(m3, z)).collect();
            for p in 0..side * side {
                let row = &self.coeffs[p * depth..(p + 1) * depth];
                a[k * side * side + p] = row.iter().zip(&ez).map(|(c, e)| c * e).sum();
            }
        }
        // b[k][j][m1] = Σ_{m2} a e^{i s m2 y_j}
        let mut b = vec![Complex64::new(0.0, 0.0); n * n * side];
        for j in 0..n {
            let y = -r + j as f64 * hx;
            let ey: Vec<Complex64> = (-m..=m).map(|m2| phase(m2, y)).collect();
            for k in 0..n {
                for p1 in 0..side {
                    let base = k * side * side + p1 * side;
                    b[(k * n + j) * side + p1] = (0..side).map(|p2| a[base + p2] * ey[p2]).sum();
                }
            }
        }
        let ex: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                let x = -r + i as f64 * hx;
                (-m..=m).map(|m1| phase(m1, x)).collect()
            })
            .collect();
        let mut values = vec![0.0; n * n * n];
        for k in 0..n {
            for j in 0..n {
                let row = &b[(k * n + j) * side..(k * n + j + 1) * side];
                for i in 0..n {
                    let v: Complex64 = row.iter().zip(&ex[i]).map(|(c, e)| c * e).sum();
                    values[(k * n + j) * n + i] = self.offset + v.re;
                }
            }
        }
        GriddedHalfBall::from_values(r, n, values)
    }
}
