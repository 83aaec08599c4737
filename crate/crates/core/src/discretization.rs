//! Spatial discretizations of `L u = -(p u_x)_x + q u`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::error::{check_len, KssError, Result};
use crate::grid::Grid;
use crate::transform::SpectralTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiscretizationKind {
    /// Fourier collocation on a periodic 1-D grid.
    #[serde(rename = "spectral-periodic-1d")]
    SpectralPeriodic1d,
    /// Three-point centered differences, periodic.
    #[serde(rename = "fd-periodic-1d")]
    FdPeriodic1d,
    /// Three-point centered differences with homogeneous Dirichlet conditions.
    #[serde(rename = "fd-dirichlet-1d")]
    FdDirichlet1d,
    /// Five-point Laplacian on a periodic square.
    #[serde(rename = "fd-periodic-2d")]
    FdPeriodic2d,
}

impl DiscretizationKind {
    pub const ALL: [DiscretizationKind; 4] = [
        Self::SpectralPeriodic1d,
        Self::FdPeriodic1d,
        Self::FdDirichlet1d,
        Self::FdPeriodic2d,
    ];

    pub fn dim(self) -> usize {
        match self {
            Self::FdPeriodic2d => 2,
            _ => 1,
        }
    }

    pub fn is_periodic(self) -> bool {
        !matches!(self, Self::FdDirichlet1d)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SpectralPeriodic1d => "spectral-periodic-1d",
            Self::FdPeriodic1d => "fd-periodic-1d",
            Self::FdDirichlet1d => "fd-dirichlet-1d",
            Self::FdPeriodic2d => "fd-periodic-2d",
        }
    }
}

impl fmt::Display for DiscretizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiscretizationKind {
    type Err = KssError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KssError::InvalidArgument(format!("unknown discretization kind '{s}'")))
    }
}

/// A grid, a pair of coefficients and the rule for discretizing `L`.
#[derive(Debug, Clone)]
pub struct Discretization {
    kind: DiscretizationKind,
    grid: Grid,
    p: CoefficientField,
    q: CoefficientField,
    transform: SpectralTransform,
    symbol: Vec<f64>,
}

impl Discretization {
    pub fn new(
        kind: DiscretizationKind,
        grid: Grid,
        p: CoefficientField,
        q: CoefficientField,
    ) -> Result<Self> {
        if grid.dim() != kind.dim() {
            return Err(KssError::InvalidArgument(format!(
                "{kind} needs a {}-D grid, got {}-D",
                kind.dim(),
                grid.dim()
            )));
        }
        check_len(grid.len(), p.values().len())?;
        check_len(grid.len(), q.values().len())?;
        if kind != DiscretizationKind::SpectralPeriodic1d && !p.is_constant() {
            return Err(KssError::Unsupported(format!(
                "{kind} requires a constant leading coefficient p"
            )));
        }
        if p.min() <= 0.0 {
            log::warn!("p is not strictly positive (min {:.3e}); L may be indefinite", p.min());
        }
        if q.min() < 0.0 {
            log::warn!("q has negative values (min {:.3e}); L may be indefinite", q.min());
        }
        let transform = match kind {
            DiscretizationKind::SpectralPeriodic1d | DiscretizationKind::FdPeriodic1d => {
                SpectralTransform::periodic_1d(grid.n())
            }
            DiscretizationKind::FdDirichlet1d => SpectralTransform::sine(grid.n()),
            DiscretizationKind::FdPeriodic2d => SpectralTransform::periodic_2d(grid.n()),
        };
        let symbol = build_symbol(kind, &grid, p.mean(), q.mean());
        Ok(Self {
            kind,
            grid,
            p,
            q,
            transform,
            symbol,
        })
    }

    /// Builds a discretization from closed-form coefficients `p(x, y)`, `q(x, y)`.
    pub fn from_fns(
        kind: DiscretizationKind,
        n: usize,
        p: impl Fn(f64, f64) -> f64,
        q: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let grid = Grid::new(n, kind.dim())?;
        let p = CoefficientField::from_fn(&grid, p);
        let q = CoefficientField::from_fn(&grid, q);
        Self::new(kind, grid, p, q)
    }

    pub fn kind(&self) -> DiscretizationKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> &CoefficientField {
        &self.p
    }

    pub fn q(&self) -> &CoefficientField {
        &self.q
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    /// Number of grid values (and mode slots).
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Indices carrying unknowns; the Dirichlet boundary slot 0 is excluded.
    pub fn active_dofs(&self) -> std::ops::Range<usize> {
        match self.kind {
            DiscretizationKind::FdDirichlet1d => 1..self.len(),
            _ => 0..self.len(),
        }
    }

    pub fn forward(&self, u: &[f64]) -> Result<Vec<Complex64>> {
        self.transform.forward(u)
    }

    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        self.transform.inverse(coeffs)
    }

    /// Symbol of the constant-coefficient operator `-p̄ D + q̄` for every mode slot.
    ///
    /// These are the prescribed nodes `l₂` of the KSS step and the diagonal of
    /// the energy metric `C_N`.
    pub fn constant_symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Wave numbers `(ω₁, ω₂)` of mode slot `slot` (`ω₂ = 0` in 1-D; sine index for Dirichlet).
    pub fn mode_wavenumber(&self, slot: usize) -> (i64, i64) {
        match self.kind {
            DiscretizationKind::FdDirichlet1d => (slot as i64, 0),
            DiscretizationKind::FdPeriodic2d => {
                let n = self.grid.n();
                (
                    self.grid.fft_wavenumber(slot / n),
                    self.grid.fft_wavenumber(slot % n),
                )
            }
            _ => (self.grid.fft_wavenumber(slot), 0),
        }
    }

    /// Discrete second derivative (Laplacian in 2-D).
    pub fn second_derivative(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), u.len())?;
        let n = self.grid.n();
        let h2 = self.grid.spacing().powi(2);
        Ok(match self.kind {
            DiscretizationKind::SpectralPeriodic1d => {
                let mut c = self.forward(u)?;
                for (slot, v) in c.iter_mut().enumerate() {
                    let w = self.grid.fft_wavenumber(slot) as f64;
                    *v *= -w * w;
                }
                self.inverse(&c)?
            }
            DiscretizationKind::FdPeriodic1d => (0..n)
                .map(|j| (u[(j + n - 1) % n] - 2.0 * u[j] + u[(j + 1) % n]) / h2)
                .collect(),
            DiscretizationKind::FdDirichlet1d => {
                let at = |j: usize| if j == 0 || j == n { 0.0 } else { u[j] };
                let mut out = vec![0.0; n];
                for j in 1..n {
                    out[j] = (at(j - 1) - 2.0 * at(j) + at(j + 1)) / h2;
                }
                out
            }
            DiscretizationKind::FdPeriodic2d => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    let im = (i + n - 1) % n;
                    let ip = (i + 1) % n;
                    for j in 0..n {
                        let jm = (j + n - 1) % n;
                        let jp = (j + 1) % n;
                        out[i * n + j] = (u[im * n + j]
                            + u[ip * n + j]
                            + u[i * n + jm]
                            + u[i * n + jp]
                            - 4.0 * u[i * n + j])
                            / h2;
                    }
                }
                out
            }
        })
    }

    /// Applies the discrete operator `L_N` (so that the semidiscrete system is `u_tt = -L_N u`).
    pub fn apply_l(&self, u: &[f64]) -> Result<Vec<f64>> {
        let d2 = self.second_derivative(u)?;
        let p_bar = self.p.mean();
        let q = self.q.values();
        let mut out: Vec<f64> = d2
            .iter()
            .zip(u)
            .zip(q)
            .map(|((d, u), q)| -p_bar * d + q * u)
            .collect();
        if self.kind == DiscretizationKind::SpectralPeriodic1d && !self.p.is_constant() {
            // -(p̃ u_x)_x; the p̄ part above keeps the Nyquist mode on the diagonal
            let ux = self.first_derivative(u)?;
            let flux: Vec<f64> = ux
                .iter()
                .zip(self.p.fluctuation())
                .map(|(a, b)| a * b)
                .collect();
            let dflux = self.first_derivative(&flux)?;
            out.iter_mut().zip(dflux).for_each(|(o, d)| *o -= d);
        }
        if self.kind == DiscretizationKind::FdDirichlet1d {
            out[0] = 0.0;
        }
        Ok(out)
    }

    /// Spectral first derivative; the Nyquist mode is dropped.
    fn first_derivative(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        let mut c = self.forward(u)?;
        for (slot, v) in c.iter_mut().enumerate() {
            if slot == n / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                let w = self.grid.fft_wavenumber(slot) as f64;
                *v *= Complex64::new(0.0, w);
            }
        }
        self.inverse(&c)
    }

    /// `max(√p) Δt / Δx`.
    pub fn cfl(&self, dt: f64) -> f64 {
        self.p.max().max(0.0).sqrt() * dt / self.grid.spacing()
    }
}

fn build_symbol(kind: DiscretizationKind, grid: &Grid, p_bar: f64, q_bar: f64) -> Vec<f64> {
    let h = grid.spacing();
    let n = grid.n();
    let fd = |theta: f64| (2.0 - 2.0 * theta.cos()) / (h * h);
    match kind {
        DiscretizationKind::SpectralPeriodic1d => (0..n)
            .map(|s| {
                let w = grid.fft_wavenumber(s) as f64;
                p_bar * w * w + q_bar
            })
            .collect(),
        DiscretizationKind::FdPeriodic1d => (0..n)
            .map(|s| p_bar * fd(grid.fft_wavenumber(s) as f64 * h) + q_bar)
            .collect(),
        DiscretizationKind::FdDirichlet1d => (0..n)
            .map(|s| p_bar * fd(s as f64 * h / 2.0) + q_bar)
            .collect(),
        DiscretizationKind::FdPeriodic2d => (0..n * n)
            .map(|s| {
                let w1 = grid.fft_wavenumber(s / n) as f64;
                let w2 = grid.fft_wavenumber(s % n) as f64;
                p_bar * (fd(w1 * h) + fd(w2 * h)) + q_bar
            })
            .collect(),
    }
}
