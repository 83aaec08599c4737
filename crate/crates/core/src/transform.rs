//! Discrete transforms between grid values and mode coefficients.
//!
//! Periodic transforms follow the convention `û(ω) = (1/N) Σ_k e^{-iωx_k} u_k`
//! with the inverse `u_k = Σ_ω û(ω) e^{iωx_k}`; coefficients are kept in FFT
//! slot order (see [`Grid::fft_wavenumber`](crate::Grid::fft_wavenumber)).
//!
//! The Dirichlet transform is the orthonormal DST-I over the `N - 1` interior
//! points of `(0, 2π)`. Grid functions keep all `N` slots; slot 0 holds the
//! boundary value, which is ignored on input and zero on output. Mode slot `k`
//! carries `sin(k x / 2)` and slot 0 is always zero.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Result};

#[derive(Clone)]
enum Plan {
    Periodic1d {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Periodic2d {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Sine {
        doubled: Arc<dyn Fft<f64>>,
    },
}

/// Forward/inverse transform pair for one grid and boundary condition.
///
/// Plans are shared and immutable; scratch space is allocated per call, so a
/// transform may be used from several threads at once.
#[derive(Clone)]
pub struct SpectralTransform {
    n: usize,
    plan: Plan,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.plan {
            Plan::Periodic1d { .. } => "periodic-1d",
            Plan::Periodic2d { .. } => "periodic-2d",
            Plan::Sine { .. } => "sine",
        };
        f.debug_struct("SpectralTransform")
            .field("n", &self.n)
            .field("kind", &kind)
            .finish()
    }
}

impl SpectralTransform {
    pub fn periodic_1d(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            plan: Plan::Periodic1d {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            },
        }
    }

    pub fn periodic_2d(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            plan: Plan::Periodic2d {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            },
        }
    }

    pub fn sine(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            plan: Plan::Sine {
                doubled: planner.plan_fft_forward(2 * n),
            },
        }
    }

    /// Number of values (and of mode slots).
    pub fn len(&self) -> usize {
        match self.plan {
            Plan::Periodic2d { .. } => self.n * self.n,
            _ => self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, u: &[f64]) -> Result<Vec<Complex64>> {
        check_len(self.len(), u.len())?;
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_complex_in_place(&mut buf)?;
        Ok(buf)
    }

    /// Forward transform of complex grid values (periodic kinds only; the sine
    /// transform treats real and imaginary parts independently).
    pub fn forward_complex(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.len(), u.len())?;
        let mut buf = u.to_vec();
        self.forward_complex_in_place(&mut buf)?;
        Ok(buf)
    }

    fn forward_complex_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        let n = self.n;
        match &self.plan {
            Plan::Periodic1d { forward, .. } => {
                forward.process(buf);
                let s = 1.0 / n as f64;
                buf.iter_mut().for_each(|c| *c *= s);
            }
            Plan::Periodic2d { forward, .. } => {
                fft_2d(buf, n, forward.as_ref());
                let s = 1.0 / (n * n) as f64;
                buf.iter_mut().for_each(|c| *c *= s);
            }
            Plan::Sine { doubled } => dst1(buf, doubled.as_ref()),
        }
        Ok(())
    }

    /// Inverse transform returning real grid values (imaginary residue is discarded).
    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self.inverse_complex(coeffs)?.into_iter().map(|c| c.re).collect())
    }

    pub fn inverse_complex(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.len(), coeffs.len())?;
        let n = self.n;
        let mut buf = coeffs.to_vec();
        match &self.plan {
            Plan::Periodic1d { inverse, .. } => inverse.process(&mut buf),
            Plan::Periodic2d { inverse, .. } => fft_2d(&mut buf, n, inverse.as_ref()),
            // DST-I is its own inverse under the orthonormal scaling.
            Plan::Sine { doubled } => dst1(&mut buf, doubled.as_ref()),
        }
        Ok(buf)
    }
}

/// Unnormalized 2-D FFT of an `n x n` row-major array.
fn fft_2d(buf: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    // rows are contiguous
    fft.process(buf);
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            column[i] = buf[i * n + j];
        }
        fft.process(&mut column);
        for i in 0..n {
            buf[i * n + j] = column[i];
        }
    }
}

/// Orthonormal DST-I of the interior values `v[1..n]`, via a length-`2n` FFT of
/// the odd extension. Slot 0 of the input is ignored and of the output is zero.
/// Orthonormal DST-I of real and imaginary parts at once (slot 0 ignored).
fn dst1(buf: &mut [Complex64], doubled: &dyn Fft<f64>) {
    let n = buf.len();
    let mut ext = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 1..n {
        ext[j] = buf[j];
        ext[2 * n - j] = -buf[j];
    }
    doubled.process(&mut ext);
    // the odd extension of real data transforms to -2i Σ v_j sin(πjk/n),
    // so the real part comes back in Im and the imaginary part in Re
    let scale = 0.5 * (2.0 / n as f64).sqrt();
    buf[0] = Complex64::new(0.0, 0.0);
    for k in 1..n {
        buf[k] = Complex64::new(-ext[k].im, ext[k].re) * scale;
    }
}
