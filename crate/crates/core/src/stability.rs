//! Dense one-step operators, their energy norm, and stability scans.
//!
//! The energy metric is `‖(u, v)‖² = uᵀC u + ‖v‖²` with `C` the
//! constant-coefficient operator whose symbol is the node table's `l₂`.
//! With `B = diag(C^{1/2}, I) S diag(C^{-1/2}, I)` the operator norm is
//! `‖S‖_C = ‖B‖₂` and `G = BᵀB`.

use std::io::Write;

use faer::Mat;
use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{KssError, Result};
use crate::output::format_sci;
use crate::problems::ProblemSpec;
use crate::propagator::{build_node_table, integrate_monitored, kss_step, NodeTable, WaveState};

/// Largest number of unknowns for which the dense operator is assembled.
pub const MAX_DENSE_DOFS: usize = 512;
/// Above this many unknowns the norm is computed by power iteration.
pub const MAX_SVD_DOFS: usize = 256;
/// Sup-norm beyond which a run counts as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Residual `‖Gx - ρx‖ / ρ` at which power iteration stops; the Rayleigh
/// quotient error is then of order its square.
const POWER_TOLERANCE: f64 = 1e-7;
const POWER_MAX_ITERATIONS: usize = 20000;

/// The KSS step as four dense blocks over the active unknowns.
#[derive(Debug, Clone)]
pub struct DenseStepOperator {
    pub dt: f64,
    pub s11: Mat<f64>,
    pub s12: Mat<f64>,
    pub s21: Mat<f64>,
    pub s22: Mat<f64>,
}

impl DenseStepOperator {
    /// Number of unknowns per component.
    pub fn n(&self) -> usize {
        self.s11.nrows()
    }

    /// The `2n × 2n` matrix `[[S11, S12], [S21, S22]]`.
    pub fn assembled(&self) -> Mat<f64> {
        let m = self.n();
        Mat::from_fn(2 * m, 2 * m, |i, j| {
            let blk = match (i < m, j < m) {
                (true, true) => &self.s11,
                (true, false) => &self.s12,
                (false, true) => &self.s21,
                (false, false) => &self.s22,
            };
            blk[(i % m, j % m)]
        })
    }
}

/// Applies the KSS step to every canonical basis state.
pub fn assemble_dense(disc: &Discretization, table: &NodeTable) -> Result<DenseStepOperator> {
    let dofs: Vec<usize> = disc.active_dofs().collect();
    let m = dofs.len();
    if m > MAX_DENSE_DOFS {
        return Err(KssError::InvalidArgument(format!(
            "dense step operator limited to {MAX_DENSE_DOFS} unknowns, got {m}"
        )));
    }
    let len = disc.len();
    let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..2 * m)
        .into_par_iter()
        .map(|c| {
            let mut s = WaveState::zeros(len);
            if c < m {
                s.u[dofs[c]] = 1.0;
            } else {
                s.ut[dofs[c - m]] = 1.0;
            }
            let out = kss_step(&s, disc, table)?;
            Ok((
                dofs.iter().map(|&i| out.u[i]).collect(),
                dofs.iter().map(|&i| out.ut[i]).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(DenseStepOperator {
        dt: table.dt(),
        s11: Mat::from_fn(m, m, |i, j| cols[j].0[i]),
        s21: Mat::from_fn(m, m, |i, j| cols[j].1[i]),
        s12: Mat::from_fn(m, m, |i, j| cols[m + j].0[i]),
        s22: Mat::from_fn(m, m, |i, j| cols[m + j].1[i]),
    })
}

/// Dense `C^{power}` over the active unknowns, built from the symbol.
pub fn metric_power(disc: &Discretization, power: f64) -> Result<Mat<f64>> {
    let dofs: Vec<usize> = disc.active_dofs().collect();
    let symbol = disc.constant_symbol();
    if let Some(bad) = dofs.iter().find(|&&k| symbol[k] <= 0.0) {
        return Err(KssError::SingularMetric(format!(
            "symbol of mode slot {bad} is {:.3e}; need p̄ > 0 and q̄ > 0",
            symbol[*bad]
        )));
    }
    let m = dofs.len();
    let cols: Vec<Vec<f64>> = dofs
        .par_iter()
        .map(|&j| {
            let mut e = vec![0.0; disc.len()];
            e[j] = 1.0;
            let mut c = disc.forward(&e)?;
            for (v, l) in c.iter_mut().zip(symbol) {
                *v *= l.powf(power);
            }
            let out = disc.inverse(&c)?;
            Ok(dofs.iter().map(|&i| out[i]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Mat::from_fn(m, m, |i, j| cols[j][i]))
}

/// `B = diag(C^{1/2}, I) S diag(C^{-1/2}, I)`.
pub fn energy_transformed(op: &DenseStepOperator, disc: &Discretization) -> Result<Mat<f64>> {
    let m = op.n();
    if disc.active_dofs().len() != m {
        return Err(KssError::SizeMismatch {
            expected: disc.active_dofs().len(),
            found: m,
        });
    }
    let half = metric_power(disc, 0.5)?;
    let inv_half = metric_power(disc, -0.5)?;
    let b11 = &half * &op.s11 * &inv_half;
    let b12 = &half * &op.s12;
    let b21 = &op.s21 * &inv_half;
    Ok(Mat::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
        (true, true) => b11[(i, j)],
        (true, false) => b12[(i, j - m)],
        (false, true) => b21[(i - m, j)],
        (false, false) => op.s22[(i - m, j - m)],
    }))
}

/// Largest singular value by dense SVD.
pub fn spectral_norm_svd(b: &Mat<f64>) -> Result<f64> {
    let s = b
        .singular_values()
        .map_err(|e| KssError::LinearAlgebra(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Largest singular value by subspace iteration on `BᵀB`.
///
/// Two vectors with a Rayleigh-Ritz step, so the `±ω` pairs of nearly equal
/// singular values do not stall convergence.
pub fn spectral_norm_power(b: &Mat<f64>) -> f64 {
    let n = b.ncols();
    let mut x = Mat::<f64>::from_fn(n, 2, |i, j| {
        let t = i as f64 + 1.0;
        if j == 0 { 1.0 + 0.5 * (0.618 * t).sin() } else { (1.7 * t * t).cos() }
    });
    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        orthonormalize(&mut x);
        let y = b.transpose() * (b * &x);
        let h = x.transpose() * &y;
        // largest eigenpair of the symmetric 2x2 projection
        let (a, c, d) = (h[(0, 0)], 0.5 * (h[(0, 1)] + h[(1, 0)]), h[(1, 1)]);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + c * c).sqrt();
        rho = mid + rad;
        let (v0, v1) = if a >= d { (rho - d, c) } else { (c, rho - a) };
        let norm = v0.hypot(v1);
        let (v0, v1) = if norm > 0.0 { (v0 / norm, v1 / norm) } else { (1.0, 0.0) };
        let residual = (0..n)
            .map(|i| {
                let gx = v0 * y[(i, 0)] + v1 * y[(i, 1)];
                let xx = v0 * x[(i, 0)] + v1 * x[(i, 1)];
                (gx - rho * xx).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        x = y;
        if residual <= POWER_TOLERANCE * rho {
            break;
        }
    }
    rho.sqrt()
}

/// Modified Gram-Schmidt on the columns of `x`.
fn orthonormalize(x: &mut Mat<f64>) {
    for j in 0..x.ncols() {
        for k in 0..j {
            let dot: f64 = (0..x.nrows()).map(|i| x[(i, j)] * x[(i, k)]).sum();
            for i in 0..x.nrows() {
                x[(i, j)] -= dot * x[(i, k)];
            }
        }
        let norm = (0..x.nrows()).map(|i| x[(i, j)].powi(2)).sum::<f64>().sqrt();
        for i in 0..x.nrows() {
            x[(i, j)] /= norm;
        }
    }
}

fn inf_norm(m: &Mat<f64>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> f64 {
    rows.map(|i| cols.clone().map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖S‖_C` and the infinity norms of the blocks of `G = BᵀB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyNorms {
    pub cn_norm: f64,
    /// `‖G11‖∞, ‖G12‖∞, ‖G21‖∞, ‖G22‖∞`.
    pub g_norms: [f64; 4],
    pub g_norm: f64,
}

pub fn energy_norms(op: &DenseStepOperator, disc: &Discretization) -> Result<EnergyNorms> {
    let b = energy_transformed(op, disc)?;
    let m = op.n();
    let cn_norm = if m <= MAX_SVD_DOFS {
        spectral_norm_svd(&b)?
    } else {
        spectral_norm_power(&b)
    };
    let g = b.transpose() * &b;
    let g_norms = [
        inf_norm(&g, 0..m, 0..m),
        inf_norm(&g, 0..m, m..2 * m),
        inf_norm(&g, m..2 * m, 0..m),
        inf_norm(&g, m..2 * m, m..2 * m),
    ];
    Ok(EnergyNorms {
        cn_norm,
        g_norms,
        g_norm: inf_norm(&g, 0..2 * m, 0..2 * m),
    })
}

/// `‖S_N(Δt)‖_{C_N}` for a discretization and step.
pub fn cn_norm(disc: &Discretization, dt: f64) -> Result<f64> {
    let table = build_node_table(disc, dt)?;
    let op = assemble_dense(disc, &table)?;
    Ok(energy_norms(&op, disc)?.cn_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    pub dt: f64,
    pub cfl: f64,
    pub cn_norm: f64,
    pub g_norms: [f64; 4],
    /// `None` if no long-time run was requested.
    pub blowup: Option<bool>,
    pub coefficients: String,
}

/// Nonnegative least-squares fit `cn_norm - 1 ≈ a·NΔt + b·Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    /// Coefficient of `N·Δt` (leading-coefficient term).
    pub a: f64,
    /// Coefficient of `Δt` (potential term).
    pub b: f64,
    pub residual: f64,
}

pub fn fit_growth(reports: &[StabilityReport]) -> Option<GrowthFit> {
    let rows: Vec<(f64, f64, f64)> = reports
        .iter()
        .filter(|r| r.cn_norm.is_finite())
        .map(|r| (r.n as f64 * r.dt, r.dt, r.cn_norm - 1.0))
        .collect();
    if rows.len() < 2 {
        return None;
    }
    let residual = |a: f64, b: f64| {
        rows.iter()
            .map(|(x1, x2, y)| (y - a * x1 - b * x2).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let s11: f64 = rows.iter().map(|r| r.0 * r.0).sum();
    let s12: f64 = rows.iter().map(|r| r.0 * r.1).sum();
    let s22: f64 = rows.iter().map(|r| r.1 * r.1).sum();
    let t1: f64 = rows.iter().map(|r| r.0 * r.2).sum();
    let t2: f64 = rows.iter().map(|r| r.1 * r.2).sum();
    let det = s11 * s22 - s12 * s12;
    let mut candidates = vec![(0.0, 0.0), ((t1 / s11).max(0.0), 0.0), (0.0, (t2 / s22).max(0.0))];
    if det.abs() > 1e-14 * s11 * s22 {
        let a = (t1 * s22 - t2 * s12) / det;
        let b = (s11 * t2 - s12 * t1) / det;
        if a >= 0.0 && b >= 0.0 {
            candidates.push((a, b));
        }
    }
    candidates
        .into_iter()
        .map(|(a, b)| GrowthFit { a, b, residual: residual(a, b) })
        .min_by(|x, y| x.residual.total_cmp(&y.residual))
}

#[derive(Debug, Clone)]
pub struct StabilityScan {
    pub reports: Vec<StabilityReport>,
    /// Cells that could not be evaluated, with the reason.
    pub failures: Vec<(usize, f64, String)>,
    pub fit: Option<GrowthFit>,
}

impl StabilityScan {
    /// CSV rows `n,dt,cfl,cn_norm,g11,g12,g21,g22,blowup_flag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| KssError::Internal(format!("csv: {e}"));
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "dt", "cfl", "cn_norm", "g11", "g12", "g21", "g22", "blowup_flag"])
            .map_err(io)?;
        for r in &self.reports {
            let flag = match r.blowup {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            let mut rec = vec![r.n.to_string(), format_sci(r.dt), format_sci(r.cfl), format_sci(r.cn_norm)];
            rec.extend(r.g_norms.iter().map(|g| format_sci(*g)));
            rec.push(flag.to_string());
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush().map_err(|e| KssError::Internal(format!("csv: {e}")))?;
        Ok(())
    }
}

fn describe(problem: &ProblemSpec, disc: &Discretization) -> String {
    format!(
        "{} p_mean={} p_fluct_sup={} q_mean={} q_fluct_sup={}",
        problem.name,
        format_sci(disc.p().mean()),
        format_sci(disc.p().fluctuation_sup()),
        format_sci(disc.q().mean()),
        format_sci(disc.q().fluctuation_sup())
    )
}

/// One report per `(N, Δt)`; with `long_run` each cell is also integrated to
/// `problem.final_time` and checked for blow-up.
pub fn stability_scan(problem: &ProblemSpec, ns: &[usize], dts: &[f64], long_run: bool) -> StabilityScan {
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| dts.iter().map(move |&dt| (n, dt))).collect();
    let results: Vec<std::result::Result<StabilityReport, String>> = cells
        .par_iter()
        .map(|&(n, dt)| {
            let run = || -> Result<StabilityReport> {
                let disc = problem.discretization(n)?;
                let table = build_node_table(&disc, dt)?;
                let op = assemble_dense(&disc, &table)?;
                let norms = energy_norms(&op, &disc)?;
                let blowup = if long_run {
                    let init = problem.initial_state(&disc)?;
                    let r = integrate_monitored(&init, &disc, dt, problem.final_time, BLOWUP_THRESHOLD, |_| {})?;
                    Some(r.blowup_time.is_some())
                } else {
                    None
                };
                Ok(StabilityReport {
                    n,
                    dt,
                    cfl: disc.cfl(dt),
                    cn_norm: norms.cn_norm,
                    g_norms: norms.g_norms,
                    blowup,
                    coefficients: describe(problem, &disc),
                })
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for ((n, dt), r) in cells.into_iter().zip(results) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push((n, dt, e)),
        }
    }
    let fit = fit_growth(&reports);
    StabilityScan { reports, failures, fit }
}

/// Time step giving CFL number `cfl` on `disc`.
pub fn dt_for_cfl(disc: &Discretization, cfl: f64) -> f64 {
    cfl * disc.grid().spacing() / disc.p().max().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::DiscretizationKind;

    #[test]
    fn constant_coefficients_are_isometric() {
        for kind in [DiscretizationKind::SpectralPeriodic1d, DiscretizationKind::FdDirichlet1d] {
            let d = Discretization::from_fns(kind, 16, |_, _| 1.5, |_, _| 0.7).unwrap();
            let t = build_node_table(&d, 0.3).unwrap();
            let op = assemble_dense(&d, &t).unwrap();
            let e = energy_norms(&op, &d).unwrap();
            assert!((e.cn_norm - 1.0).abs() < 1e-12, "{kind}: {}", e.cn_norm);
            assert!((e.g_norms[0] - 1.0).abs() < 1e-10);
            assert!(e.g_norms[1] < 1e-10);
        }
    }

    #[test]
    fn svd_and_power_iteration_agree() {
        let d = Discretization::from_fns(
            DiscretizationKind::SpectralPeriodic1d,
            32,
            |x, _| 1.0 - 0.5 * x.sin(),
            |x, _| 1.0 + 0.5 * x.cos(),
        )
        .unwrap();
        let t = build_node_table(&d, 0.2).unwrap();
        let op = assemble_dense(&d, &t).unwrap();
        let b = energy_transformed(&op, &d).unwrap();
        let a = spectral_norm_svd(&b).unwrap();
        let p = spectral_norm_power(&b);
        assert!((a - p).abs() <= 1e-8 * a, "{a} vs {p}");
    }

    #[test]
    fn singular_metric_is_rejected() {
        let d = Discretization::from_fns(DiscretizationKind::FdPeriodic1d, 16, |_, _| 1.0, |_, _| 0.0).unwrap();
        assert!(matches!(metric_power(&d, 0.5), Err(KssError::SingularMetric(_))));
    }

    #[test]
    fn growth_fit_recovers_coefficients() {
        let mk = |n: usize, dt: f64| StabilityReport {
            n,
            dt,
            cfl: 0.0,
            cn_norm: 1.0 + 0.01 * n as f64 * dt + 0.3 * dt,
            g_norms: [0.0; 4],
            blowup: None,
            coefficients: String::new(),
        };
        let reps: Vec<_> = [32, 64, 128].iter().flat_map(|&n| [0.1, 0.05].map(|dt| mk(n, dt))).collect();
        let f = fit_growth(&reps).unwrap();
        assert!((f.a - 0.01).abs() < 1e-10 && (f.b - 0.3).abs() < 1e-10);
    }

    #[test]
    fn dense_operator_matches_step() {
        let d = Discretization::from_fns(
            DiscretizationKind::SpectralPeriodic1d,
            16,
            |x, _| 1.0 + 0.2 * x.cos(),
            |x, _| 1.0 + 0.5 * x.sin(),
        )
        .unwrap();
        let t = build_node_table(&d, 0.1).unwrap();
        let op = assemble_dense(&d, &t).unwrap();
        let s = WaveState::new(
            (0..16).map(|i| (i as f64 * 0.9).sin()).collect(),
            (0..16).map(|i| (i as f64 * 0.4).cos()).collect(),
            0.0,
        )
        .unwrap();
        let direct = kss_step(&s, &d, &t).unwrap();
        let full = op.assembled();
        for i in 0..32 {
            let v: f64 = (0..32)
                .map(|j| full[(i, j)] * if j < 16 { s.u[j] } else { s.ut[j - 16] })
                .sum();
            let w = if i < 16 { direct.u[i] } else { direct.ut[i - 16] };
            assert!((v - w).abs() < 1e-12);
        }
    }
}
