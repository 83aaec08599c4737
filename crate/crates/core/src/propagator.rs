//! Second-order KSS time stepping with prescribed quadrature nodes.
//!
//! For each mode the propagator entries `f_ij(λ)` are replaced by their linear
//! interpolants through the nodes `l₁ = 0` and `l₂,ω` (the constant-coefficient
//! symbol). Applied to a grid function `g` this gives
//! `ẑ_ij(ω) = f_ij(l₂,ω) ĝ(ω) + M_ij,ω r̂_g(ω)` with `r̂_g = F(L_N g) - l₂ ⊙ ĝ`.

use num_complex::Complex64;

use crate::discretization::{Discretization, DiscretizationKind};
use crate::entry;
use crate::error::{check_len, KssError, Result};

/// Displacement and velocity at a time level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub time: f64,
}

impl WaveState {
    pub fn new(u: Vec<f64>, ut: Vec<f64>, time: f64) -> Result<Self> {
        check_len(u.len(), ut.len())?;
        Ok(Self { u, ut, time })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            u: vec![0.0; len],
            ut: vec![0.0; len],
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `max(‖u‖∞, ‖u_t‖∞)`; NaN propagates as infinity.
    pub fn sup_norm(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.ut)
            .map(|v| if v.is_finite() { v.abs() } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }
}

/// Prescribed nodes, entry values and interpolation slopes for one `(disc, Δt)`.
#[derive(Debug, Clone)]
pub struct NodeTable {
    kind: DiscretizationKind,
    dt: f64,
    l2: Vec<f64>,
    entry_values: Vec<[[f64; 2]; 2]>,
    slopes: Vec<[[f64; 2]; 2]>,
}

impl NodeTable {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The first node, `0` for every mode.
    pub fn l1(&self) -> f64 {
        0.0
    }

    pub fn l2(&self) -> &[f64] {
        &self.l2
    }

    pub fn entry_values(&self) -> &[[[f64; 2]; 2]] {
        &self.entry_values
    }

    pub fn slopes(&self) -> &[[[f64; 2]; 2]] {
        &self.slopes
    }

    fn check(&self, disc: &Discretization) -> Result<()> {
        if self.kind != disc.kind() {
            return Err(KssError::InvalidArgument(format!(
                "node table built for {}, used with {}",
                self.kind,
                disc.kind()
            )));
        }
        check_len(disc.len(), self.l2.len())
    }
}

/// Interpolation data for the source response `Δt φ₁(JΔt)` applied to `(0, b)`.
///
/// Entry `[0]` is `λ^{-1}(1 - cos(√λ Δt))` (feeds `u`), entry `[1]` is
/// `λ^{-1/2} sin(√λ Δt)` (feeds `u_t`).
#[derive(Debug, Clone)]
pub struct SourceEntryTable {
    kind: DiscretizationKind,
    dt: f64,
    values: Vec<[f64; 2]>,
    slopes: Vec<[f64; 2]>,
}

impl SourceEntryTable {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn slopes(&self) -> &[[f64; 2]] {
        &self.slopes
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(KssError::InvalidArgument(format!("time step must be positive, got {dt}")))
    }
}

pub fn build_node_table(disc: &Discretization, dt: f64) -> Result<NodeTable> {
    check_dt(dt)?;
    let l2 = disc.constant_symbol().to_vec();
    let entry_values = l2.iter().map(|&l| entry::propagator_entries(l, dt)).collect();
    let slopes = l2.iter().map(|&l| entry::propagator_slopes(l, dt)).collect();
    Ok(NodeTable {
        kind: disc.kind(),
        dt,
        l2,
        entry_values,
        slopes,
    })
}

pub fn build_source_table(disc: &Discretization, dt: f64) -> Result<SourceEntryTable> {
    check_dt(dt)?;
    let l2 = disc.constant_symbol();
    let values = l2
        .iter()
        .map(|&l| [entry::one_minus_cos_over(l, dt), entry::sinc_sqrt(l, dt)])
        .collect();
    let slopes = l2
        .iter()
        .map(|&l| [entry::one_minus_cos_slope(l, dt), entry::sinc_slope(l, dt)])
        .collect();
    Ok(SourceEntryTable {
        kind: disc.kind(),
        dt,
        values,
        slopes,
    })
}

/// Mode coefficients `ĝ` and residual `r̂_g = F(L_N g) - l₂ ⊙ ĝ`.
fn mode_data(disc: &Discretization, g: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let lg = disc.apply_l(g)?;
    let gh = disc.forward(g)?;
    let mut r = disc.forward(&lg)?;
    for ((r, g), l) in r.iter_mut().zip(&gh).zip(disc.constant_symbol()) {
        *r -= g * l;
    }
    Ok((gh, r))
}

/// One KSS step of length `table.dt()`.
pub fn kss_step(state: &WaveState, disc: &Discretization, table: &NodeTable) -> Result<WaveState> {
    table.check(disc)?;
    check_len(disc.len(), state.u.len())?;
    check_len(disc.len(), state.ut.len())?;
    let (a, b) = rayon::join(|| mode_data(disc, &state.u), || mode_data(disc, &state.ut));
    let (uh, ru) = a?;
    let (vh, rv) = b?;
    let n = disc.len();
    let mut u_new = Vec::with_capacity(n);
    let mut ut_new = Vec::with_capacity(n);
    for k in 0..n {
        let f = &table.entry_values[k];
        let m = &table.slopes[k];
        u_new.push(uh[k] * f[0][0] + ru[k] * m[0][0] + vh[k] * f[0][1] + rv[k] * m[0][1]);
        ut_new.push(uh[k] * f[1][0] + ru[k] * m[1][0] + vh[k] * f[1][1] + rv[k] * m[1][1]);
    }
    Ok(WaveState {
        u: disc.inverse(&u_new)?,
        ut: disc.inverse(&ut_new)?,
        time: state.time + table.dt,
    })
}

/// KSS step for `u_tt = -L u + b` with `b` frozen over the step.
pub fn kss_step_with_source(
    state: &WaveState,
    disc: &Discretization,
    table: &NodeTable,
    source_table: &SourceEntryTable,
    b: &[f64],
) -> Result<WaveState> {
    table.check(disc)?;
    if source_table.kind != disc.kind() || source_table.dt != table.dt {
        return Err(KssError::InvalidArgument(
            "source table does not match node table".into(),
        ));
    }
    check_len(disc.len(), b.len())?;
    let homogeneous = kss_step(state, disc, table)?;
    let (bh, rb) = mode_data(disc, b)?;
    let n = disc.len();
    let mut du = Vec::with_capacity(n);
    let mut dut = Vec::with_capacity(n);
    for k in 0..n {
        let g = &source_table.values[k];
        let m = &source_table.slopes[k];
        du.push(bh[k] * g[0] + rb[k] * m[0]);
        dut.push(bh[k] * g[1] + rb[k] * m[1]);
    }
    let du = disc.inverse(&du)?;
    let dut = disc.inverse(&dut)?;
    let mut out = homogeneous;
    out.u.iter_mut().zip(du).for_each(|(a, b)| *a += b);
    out.ut.iter_mut().zip(dut).for_each(|(a, b)| *a += b);
    Ok(out)
}

/// Splits `[0, t_final]` into full steps of `dt` plus an optional shorter last step.
///
/// A remainder within `1e-9 dt` of zero (or of `dt`) is absorbed.
pub fn step_schedule(dt: f64, t_final: f64) -> Result<(usize, Option<f64>)> {
    check_dt(dt)?;
    if !(t_final >= 0.0) {
        return Err(KssError::InvalidArgument(format!(
            "final time must be nonnegative, got {t_final}"
        )));
    }
    let ratio = t_final / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        return Ok((nearest as usize, None));
    }
    let full = ratio.floor() as usize;
    Ok((full, Some(t_final - full as f64 * dt)))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub state: WaveState,
    pub steps: usize,
    /// Largest `max(‖u‖∞, ‖u_t‖∞)` seen, including the initial state.
    pub max_sup: f64,
    /// Time at which the sup-norm first exceeded the threshold.
    pub blowup_time: Option<f64>,
}

/// Integrates from `initial.time` over a duration `t_final - initial.time`.
pub fn integrate(
    initial: &WaveState,
    disc: &Discretization,
    dt: f64,
    t_final: f64,
) -> Result<WaveState> {
    Ok(integrate_monitored(initial, disc, dt, t_final, f64::INFINITY, |_| {})?.state)
}

/// Like [`integrate`], stopping early once the sup-norm exceeds `blowup_threshold`
/// (or becomes non-finite). `observer` sees every state, the initial one included.
pub fn integrate_monitored(
    initial: &WaveState,
    disc: &Discretization,
    dt: f64,
    t_final: f64,
    blowup_threshold: f64,
    mut observer: impl FnMut(&WaveState),
) -> Result<RunSummary> {
    let (full, rest) = step_schedule(dt, t_final - initial.time)?;
    let table = build_node_table(disc, dt)?;
    let mut state = initial.clone();
    observer(&state);
    let mut max_sup = state.sup_norm();
    let mut steps = 0;
    let start = initial.time;
    let last = rest.map(|h| build_node_table(disc, h)).transpose()?;
    for k in 0..full + usize::from(last.is_some()) {
        let t = if k < full { &table } else { last.as_ref().unwrap() };
        state = kss_step(&state, disc, t)?;
        // avoid accumulating roundoff in the clock
        state.time = if k < full {
            start + (k + 1) as f64 * dt
        } else {
            t_final
        };
        steps += 1;
        observer(&state);
        let sup = state.sup_norm();
        max_sup = max_sup.max(sup);
        if sup > blowup_threshold {
            return Ok(RunSummary {
                blowup_time: Some(state.time),
                state,
                steps,
                max_sup,
            });
        }
    }
    Ok(RunSummary {
        state,
        steps,
        max_sup,
        blowup_time: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_disc(kind: DiscretizationKind, n: usize) -> Discretization {
        Discretization::from_fns(kind, n, |_, _| 1.0, |_, _| 1.0).unwrap()
    }

    #[test]
    fn node_table_entries() {
        let d = constant_disc(DiscretizationKind::SpectralPeriodic1d, 16);
        let t = build_node_table(&d, 0.1).unwrap();
        assert_eq!(t.l2()[1], 2.0);
        assert!((t.entry_values()[0][0][0] - 0.1f64.cos()).abs() < 1e-15);
        assert!((t.slopes()[0][0][0] - (0.1f64.cos() - 1.0)).abs() < 1e-15);
        assert!(build_node_table(&d, 0.0).is_err());
        assert!(build_node_table(&d, -1.0).is_err());
    }

    #[test]
    fn slope_bounds() {
        let d = Discretization::from_fns(DiscretizationKind::SpectralPeriodic1d, 128, |_, _| 1.0, |_, _| 0.7)
            .unwrap();
        for dt in [0.5, 0.05, 0.005] {
            let t = build_node_table(&d, dt).unwrap();
            for (l, m) in t.l2().iter().zip(t.slopes()) {
                let tol = 1.0 + 1e-12;
                assert!(m[0][0].abs() <= tol * dt * dt / 2.0);
                assert!(m[1][0].abs() <= tol * dt);
                // the sharp bound is 2Δt/l₂; Δt/l₂ fails near √l₂Δt = 3π/2
                assert!(m[0][1].abs() <= tol * 2.0 * dt / l);
                assert!(m[0][0].abs() <= tol * dt / l.sqrt());
            }
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let d = constant_disc(DiscretizationKind::FdPeriodic1d, 32);
        let t = build_node_table(&d, 0.1).unwrap();
        let s = kss_step(&WaveState::zeros(32), &d, &t).unwrap();
        assert!(s.u.iter().chain(&s.ut).all(|v| *v == 0.0));
        assert!((s.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_mode_constant_coefficients() {
        let d = constant_disc(DiscretizationKind::SpectralPeriodic1d, 32);
        let dt = 0.3;
        let t = build_node_table(&d, dt).unwrap();
        let u0 = d.grid().sample(|x, _| x.sin());
        let s = kss_step(&WaveState::new(u0.clone(), vec![0.0; 32], 0.0).unwrap(), &d, &t).unwrap();
        let w = 2f64.sqrt();
        for j in 0..32 {
            assert!((s.u[j] - (w * dt).cos() * u0[j]).abs() < 1e-14);
            assert!((s.ut[j] + w * (w * dt).sin() * u0[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_source_closed_form() {
        let d = constant_disc(DiscretizationKind::SpectralPeriodic1d, 16);
        let dt = 0.2;
        let t = build_node_table(&d, dt).unwrap();
        let st = build_source_table(&d, dt).unwrap();
        let c0 = 0.7;
        let s = kss_step_with_source(&WaveState::zeros(16), &d, &t, &st, &[c0; 16]).unwrap();
        for j in 0..16 {
            assert!((s.u[j] - c0 * (1.0 - dt.cos())).abs() < 1e-15);
            assert!((s.ut[j] - c0 * dt.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_source_matches_homogeneous_step() {
        let d = Discretization::from_fns(
            DiscretizationKind::SpectralPeriodic1d,
            32,
            |x, _| 1.0 + 0.3 * x.cos(),
            |x, _| 1.0 + 0.5 * x.sin(),
        )
        .unwrap();
        let t = build_node_table(&d, 0.05).unwrap();
        let st = build_source_table(&d, 0.05).unwrap();
        let s0 = WaveState::new(d.grid().sample(|x, _| (-(x - 3.0).powi(2)).exp()), vec![0.0; 32], 0.0).unwrap();
        let a = kss_step(&s0, &d, &t).unwrap();
        let b = kss_step_with_source(&s0, &d, &t, &st, &[0.0; 32]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_mismatch_is_rejected() {
        let a = constant_disc(DiscretizationKind::SpectralPeriodic1d, 16);
        let b = constant_disc(DiscretizationKind::FdPeriodic1d, 16);
        let c = constant_disc(DiscretizationKind::SpectralPeriodic1d, 32);
        let t = build_node_table(&a, 0.1).unwrap();
        assert!(kss_step(&WaveState::zeros(16), &b, &t).is_err());
        assert!(kss_step(&WaveState::zeros(32), &c, &t).is_err());
    }

    #[test]
    fn schedule_with_remainder() {
        assert_eq!(step_schedule(0.1, 1.0).unwrap(), (10, None));
        let (full, rest) = step_schedule(std::f64::consts::PI / 128.0, 10.0).unwrap();
        assert_eq!(full, 407);
        let h = rest.unwrap();
        assert!(h > 0.0 && h < std::f64::consts::PI / 128.0);
        assert_eq!(step_schedule(0.25, 0.0).unwrap(), (0, None));
    }

    #[test]
    fn integrate_reaches_final_time() {
        let d = constant_disc(DiscretizationKind::FdDirichlet1d, 16);
        let s0 = WaveState::new(d.grid().sample(|x, _| (x / 2.0).sin()), vec![0.0; 16], 0.0).unwrap();
        let mut seen = 0;
        let r = integrate_monitored(&s0, &d, 0.3, 1.0, 1e6, |_| seen += 1).unwrap();
        assert_eq!(r.steps, 4);
        assert_eq!(seen, 5);
        assert_eq!(r.state.time, 1.0);
        assert!(r.blowup_time.is_none());
    }
}
