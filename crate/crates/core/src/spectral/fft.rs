use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Square 2D complex FFT built from batched 1D transforms and transposes.
///
/// Forward transforms are normalised by `1/n²`, so the zero mode of a field
/// is its mean and `θ(x) = Σ θ̂ₖ e^{ik·x}`.
pub struct Fft2d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Fft2d {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch_len,
        }
    }

    /// Shared plan for size `n`.
    pub fn cached(n: usize) -> Arc<Fft2d> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2d>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry(n).or_insert_with(|| Arc::new(Fft2d::new(n))).clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n, "buffer does not match plan");
        self.rows(data, plan);
        transpose(data, self.n);
        self.rows(data, plan);
        transpose(data, self.n);
    }

    // Rows are independent, so the result does not depend on the thread count.
    fn rows(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let chunk = self.n * (self.n / rayon::current_num_threads().max(1)).clamp(1, self.n);
        data.par_chunks_mut(chunk).for_each_init(
            || vec![Complex64::new(0.0, 0.0); self.scratch_len],
            |scratch, rows| plan.process_with_scratch(rows, scratch),
        );
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for jb in (0..n).step_by(BLOCK) {
        for ib in (jb..n).step_by(BLOCK) {
            for j in jb..(jb + BLOCK).min(n) {
                let start = if ib == jb { j + 1 } else { ib };
                for i in start..(ib + BLOCK).min(n) {
                    data.swap(j * n + i, i * n + j);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_is_involution() {
        let n = 64;
        let orig: Vec<Complex64> = (0..n * n).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let mut d = orig.clone();
        transpose(&mut d, n);
        assert_eq!(d[n + 2], orig[2 * n + 1]);
        transpose(&mut d, n);
        assert_eq!(d, orig);
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 16;
        let plan = Fft2d::cached(n);
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut d: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                Complex64::from_polar(1.0, 3.0 * i as f64 * h - 2.0 * j as f64 * h)
            })
            .collect();
        plan.forward(&mut d);
        let idx = (n - 2) * n + 3;
        assert!((d[idx] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        let rest: f64 = d
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != idx)
            .map(|(_, c)| c.norm())
            .sum();
        assert!(rest < 1e-12);
    }
}
