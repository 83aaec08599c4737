//! Acceleration wave in a dusty gas.
//!
//! The model is
//! `λ₀ w_ttt + (1+κ₀) w_tt + L w + λ₀ L w_t = 0` on `0 < z < ℓ` with
//! `L = -(1 - z/H₁) ∂_zz + k ∂_z`, zero initial data and boundary values
//! `w(0,t) = sin Ωt`, `w(ℓ,t) = 0`.
//!
//! The coordinate map `y = φ(z)` makes the leading coefficient constant and
//! the gauge `ψ(y)` removes the first-order term, leaving
//! `L̄ = -ã₂ ∂_yy + a₀(y)`. A polynomial lifting `F` homogenizes the boundary
//! values, and `u = ū + λ₀ ū_t` turns the third-order equation into a sourced
//! wave equation that the Dirichlet KSS step advances.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Discretization, DiscretizationKind};
use crate::error::{check_len, KssError, Result};
use crate::propagator::{
    build_node_table, build_source_table, kss_step_with_source, step_schedule, NodeTable,
    SourceEntryTable, WaveState,
};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DustyGasParams {
    pub ell: f64,
    pub lambda0: f64,
    pub kappa0: f64,
    pub h1: f64,
    pub k: f64,
    pub omega: f64,
}

impl Default for DustyGasParams {
    fn default() -> Self {
        Self {
            ell: 2.0,
            lambda0: 0.01336,
            kappa0: 0.05,
            h1: 4.7278,
            k: 1.4806,
            omega: PI,
        }
    }
}

impl DustyGasParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.ell, self.lambda0, self.kappa0, self.h1, self.k, self.omega];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(KssError::InvalidArgument("dusty-gas parameters must be finite".into()));
        }
        if !(self.ell > 0.0 && self.ell < self.h1) {
            return Err(KssError::Domain(format!(
                "need 0 < ell < h1, got ell = {}, h1 = {}",
                self.ell, self.h1
            )));
        }
        if self.lambda0 <= 0.0 {
            return Err(KssError::Unsupported("lambda0 must be positive".into()));
        }
        Ok(())
    }

    /// Analytic front position `t - t²/(4H₁)`.
    pub fn front(&self, t: f64) -> f64 {
        t - t * t / (4.0 * self.h1)
    }
}

/// The coordinate map and the coefficients of `L̄`.
///
/// With `s(y) = √(1 - z/H₁) = 1 - y/(2H₁C)` everything is closed form:
/// `ã₁ = κC/s` with `κ = k - 1/(2H₁)`, `ψ = s^{-H₁κ}`, `a₀ = (κ² - κ/H₁)/(4s²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedOperator {
    pub params: DustyGasParams,
    /// `C = ℓ / ∫₀^ℓ a₂^{-1/2}`.
    pub c: f64,
    /// `ã₂ = C²`.
    pub a2_tilde: f64,
    kappa: f64,
}

pub fn build_transform(params: &DustyGasParams) -> Result<TransformedOperator> {
    params.validate()?;
    let h = params.h1;
    let integral = 2.0 * h * (1.0 - (1.0 - params.ell / h).sqrt());
    let c = params.ell / integral;
    Ok(TransformedOperator {
        params: *params,
        c,
        a2_tilde: c * c,
        kappa: params.k - 0.5 / h,
    })
}

impl TransformedOperator {
    fn h(&self) -> f64 {
        self.params.h1
    }

    pub fn a2(&self, z: f64) -> f64 {
        1.0 - z / self.h()
    }

    /// `√(a₂(φ⁻¹(y)))`.
    pub fn s(&self, y: f64) -> f64 {
        1.0 - y / (2.0 * self.h() * self.c)
    }

    pub fn phi(&self, z: f64) -> f64 {
        2.0 * self.h() * self.c * (1.0 - self.a2(z).sqrt())
    }

    pub fn phi_inv(&self, y: f64) -> f64 {
        let s = self.s(y);
        self.h() * (1.0 - s * s)
    }

    pub fn phi_z(&self, z: f64) -> f64 {
        self.c / self.a2(z).sqrt()
    }

    /// `ā₁ = (a₁ + a₂'/2) φ_z` in the original coordinate.
    pub fn a1_bar(&self, z: f64) -> f64 {
        self.kappa * self.phi_z(z)
    }

    /// `ã₁ = ā₁ ∘ φ⁻¹`.
    pub fn a1_tilde(&self, y: f64) -> f64 {
        self.kappa * self.c / self.s(y)
    }

    fn a1_tilde_y(&self, y: f64) -> f64 {
        self.kappa / (2.0 * self.h() * self.s(y).powi(2))
    }

    /// `a₀ = -ã₁'/2 + ã₁²/(4ã₂)`.
    pub fn a0(&self, y: f64) -> f64 {
        -0.5 * self.a1_tilde_y(y) + self.a1_tilde(y).powi(2) / (4.0 * self.a2_tilde)
    }

    fn gauge_integral(&self, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * GL8
            .iter()
            .map(|(x, w)| w * self.a1_tilde(mid + half * x) / (2.0 * self.a2_tilde))
            .sum::<f64>()
    }

    /// `ψ(y) = exp ∫₀^y ã₁/(2ã₂)`, so `ψ(0) = 1`.
    pub fn psi(&self, y: f64) -> f64 {
        const PANELS: usize = 4;
        let h = y / PANELS as f64;
        (0..PANELS)
            .map(|i| self.gauge_integral(i as f64 * h, (i + 1) as f64 * h))
            .sum::<f64>()
            .exp()
    }

    /// `ψ` at nondecreasing points by composite Gauss–Legendre quadrature
    /// between consecutive points of `ys` (nondecreasing, starting at 0 or above).
    pub fn psi_samples(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ys.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &y in ys {
            if y < prev {
                return Err(KssError::InvalidArgument("psi sample points must be nondecreasing".into()));
            }
            acc += self.gauge_integral(prev, y);
            out.push(acc.exp());
            prev = y;
        }
        Ok(out)
    }
}

/// `α sin Ωt + β cos Ωt` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub sin: f64,
    pub cos: f64,
}

impl Harmonic {
    /// `order`-th time derivative at `t`.
    pub fn eval(&self, omega: f64, t: f64, order: u32) -> f64 {
        let (s, c) = (omega * t).sin_cos();
        let w = omega.powi(order as i32);
        match order % 4 {
            0 => w * (self.sin * s + self.cos * c),
            1 => w * (self.sin * c - self.cos * s),
            2 => -w * (self.sin * s + self.cos * c),
            _ => -w * (self.sin * c - self.cos * s),
        }
    }
}

/// Boundary lifting `F = Σ fᵢ(t) yⁱ` and the source `G` it induces.
#[derive(Debug, Clone)]
pub struct Homogenization {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a2_coef: f64,
    pub b2_coef: f64,
    /// `f₀ … f₄`.
    pub f: [Harmonic; 5],
    omega: f64,
    ell: f64,
    lambda0: f64,
    kappa0: f64,
    a2_tilde: f64,
}

/// Derivatives of `F` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiftingValues {
    pub f: f64,
    pub f_t: f64,
    pub f_tt: f64,
    pub f_ttt: f64,
    pub f_y: f64,
    pub f_yy: f64,
    pub f_tyy: f64,
}

pub fn homogenize(op: &TransformedOperator) -> Result<Homogenization> {
    let p = &op.params;
    let (om, l0, a2, ell) = (p.omega, p.lambda0, op.a2_tilde, p.ell);
    let a0m = op.a0(0.0);
    // G(0,t) = 0 reads f₂' = a f₂ + b cos Ωt + c sin Ωt
    let a = -1.0 / l0;
    let b = (-om.powi(3) + om * a0m) / (2.0 * a2);
    let c = (-(1.0 + p.kappa0) * om * om + a0m) / (2.0 * a2 * l0);
    let den = om * om + a * a;
    let a2_coef = (b * om - a * c) / den;
    let b2_coef = -(a * b + c * om) / den;
    let f0 = Harmonic { sin: 1.0, cos: 0.0 };
    let f2 = Harmonic { sin: a2_coef, cos: b2_coef };
    // F(ℓ) = 0, F_yy(ℓ) = 0, F_y(ℓ) = 0 for (f₁, f₃, f₄)
    let m = Mat::from_fn(3, 3, |i, j| {
        [
            [ell, ell.powi(3), ell.powi(4)],
            [0.0, 6.0 * ell, 12.0 * ell * ell],
            [1.0, 3.0 * ell * ell, 4.0 * ell.powi(3)],
        ][i][j]
    });
    let rhs = Mat::from_fn(3, 2, |i, j| {
        let (g0, g2) = if j == 0 { (f0.sin, f2.sin) } else { (f0.cos, f2.cos) };
        [-g0 - g2 * ell * ell, -2.0 * g2, -2.0 * ell * g2][i]
    });
    let lu = m.partial_piv_lu();
    let sol = faer::linalg::solvers::Solve::solve(&lu, &rhs);
    let check = &m * &sol - &rhs;
    if !sol.norm_max().is_finite() || check.norm_max() > 1e-10 * (1.0 + rhs.norm_max()) {
        return Err(KssError::LinearAlgebra("singular lifting system".into()));
    }
    let h = |i: usize| Harmonic { sin: sol[(i, 0)], cos: sol[(i, 1)] };
    Ok(Homogenization {
        a,
        b,
        c,
        a2_coef,
        b2_coef,
        f: [f0, h(0), f2, h(1), h(2)],
        omega: om,
        ell,
        lambda0: l0,
        kappa0: p.kappa0,
        a2_tilde: a2,
    })
}

/// Time derivatives `f_i^{(o)}(t)` for `o = 0..4`, `i = 0..5`, frozen at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftingAt {
    d: [[f64; 5]; 4],
}

impl LiftingAt {
    fn poly(&self, o: usize, y: f64) -> f64 {
        self.d[o].iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    fn y_derivatives(&self, o: usize, y: f64) -> (f64, f64) {
        let d = &self.d[o];
        let fy = d[1] + y * (2.0 * d[2] + y * (3.0 * d[3] + y * 4.0 * d[4]));
        let fyy = 2.0 * d[2] + y * (6.0 * d[3] + y * 12.0 * d[4]);
        (fy, fyy)
    }

    pub fn values(&self, y: f64) -> LiftingValues {
        let (f_y, f_yy) = self.y_derivatives(0, y);
        let (_, f_tyy) = self.y_derivatives(1, y);
        LiftingValues {
            f: self.poly(0, y),
            f_t: self.poly(1, y),
            f_tt: self.poly(2, y),
            f_ttt: self.poly(3, y),
            f_y,
            f_yy,
            f_tyy,
        }
    }
}

impl Homogenization {
    pub fn at(&self, t: f64) -> LiftingAt {
        let mut d = [[0.0; 5]; 4];
        for (o, row) in d.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = self.f[i].eval(self.omega, t, o as u32);
            }
        }
        LiftingAt { d }
    }

    pub fn lifting(&self, y: f64, t: f64) -> LiftingValues {
        self.at(t).values(y)
    }

    /// `G = λ₀F_ttt + (1+κ₀)F_tt - ã₂F_yy + a₀F + λ₀(-ã₂F_tyy + a₀F_t)`.
    pub fn source(&self, y: f64, t: f64, a0: f64) -> f64 {
        self.source_at(&self.at(t), y, a0)
    }

    pub fn source_at(&self, at: &LiftingAt, y: f64, a0: f64) -> f64 {
        let v = at.values(y);
        self.lambda0 * v.f_ttt + (1.0 + self.kappa0) * v.f_tt - self.a2_tilde * v.f_yy
            + a0 * v.f
            + self.lambda0 * (-self.a2_tilde * v.f_tyy + a0 * v.f_t)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }
}

/// `(u, u_t)` of the sourced wave equation plus the relaxed field `ū`.
#[derive(Debug, Clone, PartialEq)]
pub struct DustyState {
    pub wave: WaveState,
    pub ubar: Vec<f64>,
}

impl DustyState {
    pub fn time(&self) -> f64 {
        self.wave.time
    }
}

/// Transformed problem on an `N`-point Dirichlet grid over `y ∈ [0, ℓ]`.
///
/// The grid is the computational `[0, 2π]` one scaled by `ℓ/2π`, so the
/// discretization carries `p̄ = ã₂ (2π/ℓ)²`.
#[derive(Debug)]
pub struct DustySolver {
    pub transform: TransformedOperator,
    pub homogenization: Homogenization,
    disc: Discretization,
    ys: Vec<f64>,
    a0: Vec<f64>,
    psi: Vec<f64>,
}

impl DustySolver {
    pub fn new(params: &DustyGasParams, n: usize) -> Result<Self> {
        let transform = build_transform(params)?;
        let homogenization = homogenize(&transform)?;
        let ell = params.ell;
        let scale = ell / (2.0 * PI);
        let p_bar = transform.a2_tilde / (scale * scale);
        let disc = Discretization::from_fns(DiscretizationKind::FdDirichlet1d, n, |_, _| p_bar, |x, _| {
            transform.a0(x * scale)
        })?;
        let ys: Vec<f64> = (0..n).map(|j| j as f64 * ell / n as f64).collect();
        let a0 = ys.iter().map(|&y| transform.a0(y)).collect();
        let psi = transform.psi_samples(&ys)?;
        log_aliasing(&disc);
        Ok(Self {
            transform,
            homogenization,
            disc,
            ys,
            a0,
            psi,
        })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// Grid points in `y` (the boundary `y = ℓ` is implicit).
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    /// Grid spacing in `y`, also the uniform output spacing in `z`.
    pub fn spacing(&self) -> f64 {
        self.transform.params.ell / self.n() as f64
    }

    /// Step with CFL number `cfl = √ã₂ Δt / Δy`.
    pub fn dt_for_cfl(&self, cfl: f64) -> f64 {
        cfl * self.spacing() / self.transform.c
    }

    pub fn cfl(&self, dt: f64) -> f64 {
        self.disc.cfl(dt)
    }

    /// `w = 0` at `t = 0`, so `ū = -F`, `ū_t = -F_t`, `ū_tt = -F_tt`.
    pub fn initial_state(&self) -> DustyState {
        let at = self.homogenization.at(0.0);
        let l0 = self.transform.params.lambda0;
        let mut u = Vec::with_capacity(self.n());
        let mut ut = Vec::with_capacity(self.n());
        let mut ubar = Vec::with_capacity(self.n());
        for &y in &self.ys {
            let v = at.values(y);
            ubar.push(-v.f);
            u.push(-v.f - l0 * v.f_t);
            ut.push(-v.f_t - l0 * v.f_tt);
        }
        // ū vanishes on the boundary for all t
        u[0] = 0.0;
        ut[0] = 0.0;
        ubar[0] = 0.0;
        DustyState {
            wave: WaveState { u, ut, time: 0.0 },
            ubar,
        }
    }

    /// Source `b = -κ₀ ū_tt - G` at the state's time.
    pub fn source_term(&self, state: &DustyState) -> Vec<f64> {
        let p = &self.transform.params;
        let at = self.homogenization.at(state.time());
        let mut b: Vec<f64> = (0..self.n())
            .map(|j| {
                let ubar_t = (state.wave.u[j] - state.ubar[j]) / p.lambda0;
                let ubar_tt = (state.wave.ut[j] - ubar_t) / p.lambda0;
                -p.kappa0 * ubar_tt - self.homogenization.source_at(&at, self.ys[j], self.a0[j])
            })
            .collect();
        b[0] = 0.0;
        b
    }

    /// `w̄ = ū + F` on the grid.
    pub fn w_bar(&self, state: &DustyState) -> Vec<f64> {
        let at = self.homogenization.at(state.time());
        self.ys
            .iter()
            .zip(&state.ubar)
            .map(|(&y, ub)| ub + at.values(y).f)
            .collect()
    }

    /// `w` at the mapped grid points `z_j = φ⁻¹(y_j)`, with `z = ℓ` appended.
    pub fn field_on_grid(&self, state: &DustyState) -> (Vec<f64>, Vec<f64>) {
        let wb = self.w_bar(state);
        let mut z: Vec<f64> = self.ys.iter().map(|&y| self.transform.phi_inv(y)).collect();
        let mut w: Vec<f64> = wb.iter().zip(&self.psi).map(|(a, b)| a * b).collect();
        z.push(self.transform.params.ell);
        w.push(0.0);
        (z, w)
    }

    /// Largest residual of the lifting conditions at time `t`:
    /// `F(0) = sin Ωt`, `F(ℓ) = F_y(ℓ) = 0`, `G(0) = G(ℓ) = 0`.
    pub fn boundary_residual(&self, t: f64) -> f64 {
        let h = &self.homogenization;
        let ell = self.transform.params.ell;
        let at0 = h.lifting(0.0, t);
        let at_l = h.lifting(ell, t);
        [
            (at0.f - (self.transform.params.omega * t).sin()).abs(),
            at_l.f.abs(),
            at_l.f_y.abs(),
            h.source(0.0, t, self.transform.a0(0.0)).abs(),
            h.source(ell, t, self.transform.a0(ell)).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn tables(&self, dt: f64) -> Result<(NodeTable, SourceEntryTable)> {
        Ok((build_node_table(&self.disc, dt)?, build_source_table(&self.disc, dt)?))
    }

    /// Evaluates `w(z) = ψ(φ(z)) w̄(φ(z))` at arbitrary `z ∈ [0, ℓ]`; `ū` is
    /// summed as a sine series, `F` and `ψ` in closed form.
    pub fn back_transform(&self, state: &DustyState, zs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), state.ubar.len())?;
        let ell = self.transform.params.ell;
        if let Some(z) = zs.iter().find(|z| !(0.0..=ell).contains(*z)) {
            return Err(KssError::Domain(format!("z = {z} outside [0, {ell}]")));
        }
        let coeffs: Vec<f64> = self.disc.forward(&state.ubar)?.iter().map(|c| c.re).collect();
        let n = self.n();
        let norm = (2.0 / n as f64).sqrt();
        let at = self.homogenization.at(state.time());
        Ok(zs
            .par_iter()
            .map(|&z| {
                let y = self.transform.phi(z).clamp(0.0, ell);
                let theta = PI * y / ell;
                let ubar = norm * sine_series(&coeffs[1..], theta);
                self.transform.psi(y) * (ubar + at.values(y).f)
            })
            .collect())
    }
}

/// `Σ_{k≥1} c_k sin(kθ)` for `coeffs = [c₁, c₂, …]`, by Clenshaw's recurrence.
pub fn sine_series(coeffs: &[f64], theta: f64) -> f64 {
    let two_cos = 2.0 * theta.cos();
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().rev() {
        let b0 = c + two_cos * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1 * theta.sin()
}

fn log_aliasing(disc: &Discretization) {
    let Ok(c) = disc.forward(disc.q().values()) else {
        return;
    };
    let n = c.len();
    let total: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let tail: f64 = c[3 * n / 4..].iter().map(|v| v.norm_sqr()).sum();
    if total > 0.0 {
        log::info!("potential energy fraction in the top quarter of sine modes: {:.3e}", tail / total);
    }
}

/// One step: frozen source `b = -κ₀ū_tt - G(t_n)`, sourced KSS step for
/// `(u, u_t)`, then the exponential recovery of `ū` at `t_{n+1}`.
pub fn dusty_step(
    solver: &DustySolver,
    state: &DustyState,
    table: &NodeTable,
    source_table: &SourceEntryTable,
) -> Result<DustyState> {
    let dt = table.dt();
    let l0 = solver.transform.params.lambda0;
    let b = solver.source_term(state);
    let wave = kss_step_with_source(&state.wave, &solver.disc, table, source_table, &b)?;
    let e = (-dt / l0).exp();
    let ubar = state
        .ubar
        .iter()
        .zip(wave.u.iter().zip(&wave.ut))
        .map(|(ub, (u, ut))| e * ub + (1.0 - e) * (u - dt * ut) + ut * (dt - l0 + l0 * e))
        .collect();
    Ok(DustyState { wave, ubar })
}

/// Largest `z` such that `|w| > threshold` somewhere in `[0, z]`; 0 if nowhere.
pub fn wavefront_location(zs: &[f64], w: &[f64], threshold: f64) -> Result<f64> {
    check_len(zs.len(), w.len())?;
    if !(threshold > 0.0) {
        return Err(KssError::InvalidArgument("front threshold must be positive".into()));
    }
    Ok(w.iter()
        .rposition(|v| v.abs() > threshold)
        .map_or(0.0, |i| zs[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DustyRunConfig {
    pub n: usize,
    pub cfl: f64,
    pub final_time: f64,
    /// Times at which `w` is sampled on a uniform `z` grid.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Front threshold relative to `sup |w|`.
    #[serde(default = "default_front_threshold")]
    pub front_threshold: f64,
}

fn default_front_threshold() -> f64 {
    DEFAULT_FRONT_THRESHOLD
}

/// Relative level above which `w` counts as arrived.
pub const DEFAULT_FRONT_THRESHOLD: f64 = 1e-3;
/// Width (in cells) of the band past `σ(t)` excluded from the causality check.
pub const FRONT_BAND_CELLS: f64 = 5.0;

impl Default for DustyRunConfig {
    fn default() -> Self {
        Self {
            n: 16384,
            cfl: 10.0,
            final_time: 2.0,
            snapshot_times: vec![0.5, 1.0, 1.5, 2.0],
            front_threshold: DEFAULT_FRONT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSample {
    pub time: f64,
    pub front: f64,
    pub sigma: f64,
    pub sup: f64,
    /// `sup_{z > σ + 5Δz} |w| / sup |w|`.
    pub ahead_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DustyRun {
    pub dt: f64,
    pub cfl: f64,
    pub dz: f64,
    pub steps: usize,
    pub snapshots: Vec<Snapshot>,
    pub fronts: Vec<FrontSample>,
    pub max_boundary_residual: f64,
}

impl DustyRun {
    /// Front samples with `t₀ ≤ t ≤ t₁`.
    pub fn fronts_between(&self, t0: f64, t1: f64) -> impl Iterator<Item = &FrontSample> {
        self.fronts.iter().filter(move |f| f.time >= t0 && f.time <= t1 + 1e-12)
    }
}

fn front_sample(solver: &DustySolver, state: &DustyState, threshold: f64) -> Result<FrontSample> {
    let (z, w) = solver.field_on_grid(state);
    let t = state.time();
    let sup = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sigma = solver.transform.params.front(t);
    let cut = sigma + FRONT_BAND_CELLS * solver.spacing();
    let ahead = z
        .iter()
        .zip(&w)
        .filter(|(z, _)| **z > cut)
        .fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
    let front = if sup > 0.0 {
        wavefront_location(&z, &w, threshold * sup)?
    } else {
        0.0
    };
    Ok(FrontSample {
        time: t,
        front,
        sigma,
        sup,
        ahead_ratio: if sup > 0.0 { ahead / sup } else { 0.0 },
    })
}

/// Full pipeline: integrate to `final_time`, record the front after every step
/// and snapshots on a uniform `z` grid of `n + 1` points.
pub fn run_dusty_gas(params: &DustyGasParams, config: &DustyRunConfig) -> Result<DustyRun> {
    if !(config.final_time > 0.0 && config.cfl > 0.0) {
        return Err(KssError::InvalidArgument("final time and CFL must be positive".into()));
    }
    let solver = DustySolver::new(params, config.n)?;
    let dt = solver.dt_for_cfl(config.cfl);
    let (table, source_table) = solver.tables(dt)?;
    let mut targets: Vec<f64> = config
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && *t <= config.final_time)
        .collect();
    targets.push(config.final_time);
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let snap_at = |t: f64| config.snapshot_times.iter().any(|s| (s - t).abs() < 1e-12);
    let dz = solver.spacing();
    let zs: Vec<f64> = (0..=config.n).map(|i| (i as f64 * dz).min(params.ell)).collect();

    let mut state = solver.initial_state();
    let mut fronts = vec![front_sample(&solver, &state, config.front_threshold)?];
    let mut snapshots = Vec::new();
    let mut max_res = solver.boundary_residual(0.0);
    let mut steps = 0;
    for target in targets {
        let (full, rest) = step_schedule(dt, target - state.time())?;
        let short = rest.map(|r| solver.tables(r)).transpose()?;
        let plan = std::iter::repeat_n((&table, &source_table), full)
            .chain(short.as_ref().map(|(a, b)| (a, b)));
        for (tb, sb) in plan {
            state = dusty_step(&solver, &state, tb, sb)?;
            steps += 1;
            max_res = max_res.max(solver.boundary_residual(state.time()));
            fronts.push(front_sample(&solver, &state, config.front_threshold)?);
        }
        // the schedule lands on the target; drop the clock's roundoff
        state.wave.time = target;
        if let Some(f) = fronts.last_mut() {
            f.time = target;
        }
        if snap_at(target) {
            let w = solver.back_transform(&state, &zs)?;
            snapshots.push(Snapshot {
                time: state.time(),
                z: zs.clone(),
                w,
            });
        }
    }
    Ok(DustyRun {
        dt,
        cfl: solver.cfl(dt),
        dz,
        steps,
        snapshots,
        fronts,
        max_boundary_residual: max_res,
    })
}
