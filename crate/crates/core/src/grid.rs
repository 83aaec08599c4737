//! Uniform grids on `(0, 2π)` and `(0, 2π)²`.

use std::f64::consts::PI;

use crate::error::{KssError, Result};

/// Uniform tensor grid with `n` points per dimension on `[0, 2π)`.
///
/// Two-dimensional grid functions are stored row-major with the `x` index
/// outermost: the value at `(x_i, y_j)` lives at `i * n + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(KssError::InvalidArgument(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 4 || n % 2 != 0 {
            return Err(KssError::InvalidArgument(format!(
                "grid size must be an even integer >= 4, got {n}"
            )));
        }
        Ok(Self {
            dim,
            n,
            spacing: 2.0 * PI / n as f64,
        })
    }

    pub fn one_d(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn two_d(n: usize) -> Result<Self> {
        Self::new(n, 2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid values (`n` or `n²`).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinates `x_j = j Δx`, `j = 0..n`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.spacing).collect()
    }

    /// Periodic wave numbers in natural order, `-n/2+1 ..= n/2`.
    pub fn wavenumbers(&self) -> Vec<i64> {
        let half = (self.n / 2) as i64;
        (1..=self.n as i64).map(|j| j - half).collect()
    }

    /// Wave number carried by slot `index` of an FFT-ordered coefficient array.
    pub fn fft_wavenumber(&self, index: usize) -> i64 {
        if index <= self.n / 2 {
            index as i64
        } else {
            index as i64 - self.n as i64
        }
    }

    /// FFT slot holding wave number `omega` (which must lie in `-n/2+1 ..= n/2`).
    pub fn fft_index(&self, omega: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if omega <= -half || omega > half {
            return None;
        }
        Some(omega.rem_euclid(self.n as i64) as usize)
    }

    /// Physical coordinates of flat index `flat`; `y` is zero in 1-D.
    pub fn coords(&self, flat: usize) -> (f64, f64) {
        match self.dim {
            1 => (flat as f64 * self.spacing, 0.0),
            _ => (
                (flat / self.n) as f64 * self.spacing,
                (flat % self.n) as f64 * self.spacing,
            ),
        }
    }

    /// Samples `f(x, y)` at every grid point (`y = 0` in 1-D).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (x, y) = self.coords(i);
                f(x, y)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_grid() {
        let g = Grid::one_d(4).unwrap();
        let pts = g.points();
        let expected = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for (a, b) in pts.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(g.wavenumbers(), vec![-1, 0, 1, 2]);
    }

    #[test]
    fn spacing_256() {
        let g = Grid::one_d(256).unwrap();
        assert!((g.spacing() - 0.024_543_692_606_170_26).abs() < 1e-15);
        assert!((g.spacing() * 256.0 - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn rejects_odd_and_small() {
        assert!(matches!(Grid::one_d(3), Err(KssError::InvalidArgument(_))));
        assert!(Grid::one_d(255).is_err());
        assert!(Grid::one_d(2).is_err());
        assert!(Grid::new(8, 3).is_err());
    }

    #[test]
    fn fft_slots_round_trip() {
        let g = Grid::one_d(16).unwrap();
        for w in g.wavenumbers() {
            let idx = g.fft_index(w).unwrap();
            assert_eq!(g.fft_wavenumber(idx), w);
        }
        assert_eq!(g.fft_index(-8), None);
        assert_eq!(g.fft_wavenumber(8), 8);
    }

    #[test]
    fn two_d_layout() {
        let g = Grid::two_d(8).unwrap();
        assert_eq!(g.len(), 64);
        let (x, y) = g.coords(8 * 3 + 5);
        assert!((x - 3.0 * g.spacing()).abs() < 1e-15);
        assert!((y - 5.0 * g.spacing()).abs() < 1e-15);
    }
}
