//! Structure of the assembled operator and the exact flow built from it.

use std::f64::consts::PI;

use kss_core::problems::{p_variable, q_trig};
use kss_core::reference::{assemble_operator, energy};
use kss_core::{Discretization, DiscretizationKind, ExactPropagator, WaveState};
use num_complex::Complex64;

fn variable(n: usize) -> Discretization {
    Discretization::from_fns(
        DiscretizationKind::SpectralPeriodic1d,
        n,
        |x, _| p_variable(x),
        |x, _| q_trig(x),
    )
    .unwrap()
}

#[test]
fn fourier_matrix_is_banded() {
    // p has bandwidth 2 and q bandwidth 3, so ê_ωᴴ L ê_ν vanishes for |ω - ν| > 3
    let n = 16;
    let d = variable(n);
    let a = assemble_operator(&d).unwrap();
    let e = |w: i64| -> Vec<Complex64> {
        (0..n)
            .map(|j| Complex64::from_polar(1.0 / (n as f64).sqrt(), w as f64 * 2.0 * PI * j as f64 / n as f64))
            .collect()
    };
    for w in -7i64..=8 {
        for v in -7i64..=8 {
            let (ew, ev) = (e(w), e(v));
            let av: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| ev[j] * a[(i, j)]).sum()).collect();
            let entry: Complex64 = ew.iter().zip(&av).map(|(x, y)| x.conj() * y).sum();
            let gap = (w - v).rem_euclid(n as i64).min((v - w).rem_euclid(n as i64));
            if gap > 3 {
                assert!(entry.norm() < 1e-11, "({w},{v}): {entry}");
            }
            if w == v {
                let expected = if w.abs() == 8 { 64.0 } else { (w * w) as f64 } + 1.0;
                assert!((entry.re - expected).abs() < 1e-11, "diag {w}: {entry}");
            }
        }
    }
}

#[test]
fn operators_are_symmetric_and_semidefinite() {
    for kind in DiscretizationKind::ALL {
        let n = if kind.dim() == 2 { 8 } else { 32 };
        let d = if kind == DiscretizationKind::SpectralPeriodic1d {
            variable(n)
        } else {
            Discretization::from_fns(kind, n, |_, _| 1.0, |x, y| 1.0 + 0.5 * (x + y).cos()).unwrap()
        };
        let a = assemble_operator(&d).unwrap();
        let m = a.nrows();
        for i in 0..m {
            for j in 0..m {
                assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-10, "{kind}");
            }
        }
        let ex = ExactPropagator::new(&d).unwrap();
        assert!(ex.eigenvalues()[0] > -1e-10, "{kind}");
    }
}

#[test]
fn fd_eigenvalues_match_symbol_for_constant_coefficients() {
    for kind in [DiscretizationKind::FdPeriodic1d, DiscretizationKind::FdDirichlet1d] {
        let d = Discretization::from_fns(kind, 32, |_, _| 1.7, |_, _| 0.3).unwrap();
        let ex = ExactPropagator::new(&d).unwrap();
        let mut sym: Vec<f64> = d.active_dofs().map(|k| d.constant_symbol()[k]).collect();
        sym.sort_by(f64::total_cmp);
        for (a, b) in ex.eigenvalues().iter().zip(&sym) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0), "{kind}: {a} vs {b}");
        }
    }
}

fn state(d: &Discretization) -> WaveState {
    WaveState::new(
        d.grid().sample(|x, _| (-(x - PI).powi(2)).exp()),
        d.grid().sample(|x, _| x.sin() * 0.2),
        0.0,
    )
    .unwrap()
}

#[test]
fn exact_flow_group_property_and_reversibility() {
    let d = variable(64);
    let ex = ExactPropagator::new(&d).unwrap();
    let s = state(&d);
    let two = ex.propagate(&ex.propagate(&s, 0.7).unwrap(), 1.1).unwrap();
    let one = ex.propagate(&s, 1.8).unwrap();
    let back = ex.propagate(&one, -1.8).unwrap();
    for j in 0..64 {
        assert!((two.u[j] - one.u[j]).abs() < 1e-12);
        assert!((two.ut[j] - one.ut[j]).abs() < 1e-11);
        assert!((back.u[j] - s.u[j]).abs() < 1e-12);
    }
}

#[test]
fn exact_flow_conserves_energy() {
    let d = variable(64);
    let ex = ExactPropagator::new(&d).unwrap();
    let s = state(&d);
    let e0 = energy(&d, &s).unwrap();
    for t in [0.5, 3.0, 10.0] {
        let e = energy(&d, &ex.propagate(&s, t).unwrap()).unwrap();
        assert!((e - e0).abs() < 1e-11 * e0, "t={t}");
    }
}
