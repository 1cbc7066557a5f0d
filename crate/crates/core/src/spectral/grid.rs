use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SpectralError;

/// Uniform periodic grid on the square `[0, side_length)²`.
///
/// Node `(i, j)` sits at `x₁ = i·h`, `x₂ = j·h` and is stored at flat index
/// `j·n + i` (row-major, `x₁` fastest). Wavevectors use the standard FFT
/// layout: index `m` carries the integer wavenumber `m` for `m ≤ n/2` and
/// `m − n` above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    side_length: f64,
}

impl Grid {
    pub fn new(n: usize, side_length: f64) -> Result<Self, SpectralError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGridSize(n));
        }
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(SpectralError::InvalidSideLength(side_length));
        }
        Ok(Self { n, side_length })
    }

    /// Grid on the standard `2π` torus.
    pub fn periodic(n: usize) -> Result<Self, SpectralError> {
        Self::new(n, 2.0 * PI)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.side_length / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }

    /// Fundamental wavenumber `2π / side_length`.
    #[inline]
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.side_length
    }

    /// Signed integer wavenumber stored at FFT index `m`.
    #[inline]
    pub fn signed_index(&self, m: usize) -> i64 {
        if m <= self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Physical wavenumber stored at FFT index `m`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> f64 {
        self.signed_index(m) as f64 * self.base_wavenumber()
    }

    /// True on the Nyquist row or column, where odd multipliers are not
    /// representable on a real field.
    #[inline]
    pub fn is_nyquist(&self, i: usize, j: usize) -> bool {
        i == self.n / 2 || j == self.n / 2
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coordinates(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.spacing();
        [i as f64 * h, j as f64 * h]
    }

    /// Physical wavevector `(k₁, k₂)` at FFT indices `(i, j)`.
    #[inline]
    pub fn wavevector(&self, i: usize, j: usize) -> [f64; 2] {
        [self.wavenumber(i), self.wavenumber(j)]
    }

    /// Displacement `x − center` reduced to the fundamental domain centred at
    /// `center`, i.e. each component in `[−L/2, L/2)`.
    #[inline]
    pub fn min_image(&self, x: [f64; 2], center: [f64; 2]) -> [f64; 2] {
        let l = self.side_length;
        let wrap = |d: f64| d - l * ((d + 0.5 * l) / l).floor();
        [wrap(x[0] - center[0]), wrap(x[1] - center[1])]
    }

    /// Largest integer wavenumber retained by the 2/3 truncation.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Iterator over all node coordinates in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.n).flat_map(move |j| (0..self.n).map(move |i| self.coordinates(i, j)))
    }

    /// Evaluate `f` at every node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid::periodic(48).is_err());
        assert!(Grid::periodic(2).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        assert!(Grid::new(16, f64::NAN).is_err());
    }

    #[test]
    fn fft_layout() {
        let g = Grid::periodic(8).unwrap();
        let idx: Vec<i64> = (0..8).map(|m| g.signed_index(m)).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        assert!((g.base_wavenumber() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_image_wraps_into_centered_cell() {
        let g = Grid::new(16, 10.0).unwrap();
        let d = g.min_image([9.5, 0.5], [0.5, 0.5]);
        assert!((d[0] + 1.0).abs() < 1e-12 && d[1].abs() < 1e-12);
        let d = g.min_image([5.4, 0.0], [0.0, 0.0]);
        assert!((d[0] + 4.6).abs() < 1e-12);
    }
}
