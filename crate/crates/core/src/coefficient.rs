//! Coefficient fields `p` and `q`: mean/fluctuation split and bandlimit detection.

use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::grid::Grid;
use crate::transform::SpectralTransform;

/// Fourier magnitudes below this fraction of the largest are treated as zero.
pub const BANDLIMIT_RELATIVE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandlimit {
    /// All Fourier coefficients with `|ω| > ω_max` vanish.
    Limited(usize),
    /// Energy reaches the Nyquist mode; the field is not resolved as bandlimited.
    Unbounded,
}

/// A sampled coefficient together with its periodic Fourier analysis.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    values: Vec<f64>,
    mean: f64,
    fluctuation: Vec<f64>,
    fourier: Vec<Complex64>,
    bandlimit: Bandlimit,
    fluctuation_sup: f64,
}

impl CoefficientField {
    /// Analyzes grid samples of a coefficient.
    pub fn analyze(values: Vec<f64>, grid: &Grid) -> Result<Self> {
        check_len(grid.len(), values.len())?;
        let transform = match grid.dim() {
            1 => SpectralTransform::periodic_1d(grid.n()),
            _ => SpectralTransform::periodic_2d(grid.n()),
        };
        let fourier = transform.forward(&values)?;
        let mean = fourier[0].re;
        let fluctuation: Vec<f64> = values.iter().map(|v| v - mean).collect();
        let fluctuation_sup = fluctuation.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let largest = fourier.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let cutoff = BANDLIMIT_RELATIVE_THRESHOLD * largest;
        let n = grid.n();
        let mut omega_max = 0usize;
        for (slot, c) in fourier.iter().enumerate() {
            if c.norm() <= cutoff {
                continue;
            }
            let w = match grid.dim() {
                1 => grid.fft_wavenumber(slot).unsigned_abs() as usize,
                _ => {
                    let w1 = grid.fft_wavenumber(slot / n).unsigned_abs() as usize;
                    let w2 = grid.fft_wavenumber(slot % n).unsigned_abs() as usize;
                    w1.max(w2)
                }
            };
            omega_max = omega_max.max(w);
        }
        let bandlimit = if omega_max >= n / 2 {
            Bandlimit::Unbounded
        } else {
            Bandlimit::Limited(omega_max)
        };

        Ok(Self {
            values,
            mean,
            fluctuation,
            fourier,
            bandlimit,
            fluctuation_sup,
        })
    }

    /// Samples a closed-form coefficient `f(x, y)` (`y` ignored in 1-D).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::analyze(grid.sample(f), grid).expect("sample length matches grid")
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_fn(grid, |_, _| value)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn fluctuation(&self) -> &[f64] {
        &self.fluctuation
    }

    /// Fourier coefficients in FFT slot order.
    pub fn fourier(&self) -> &[Complex64] {
        &self.fourier
    }

    pub fn bandlimit(&self) -> Bandlimit {
        self.bandlimit
    }

    /// `‖c - c̄‖∞` over the grid.
    pub fn fluctuation_sup(&self) -> f64 {
        self.fluctuation_sup
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when the fluctuation is at roundoff level.
    pub fn is_constant(&self) -> bool {
        self.fluctuation_sup <= 1e-12 * self.mean.abs().max(1.0)
    }
}
