//! Energy-norm stability quantities against matrix-free oracles.

use std::f64::consts::PI;

use faer::{Mat, Side};
use kss_core::problems::{table1_problem, variable_speed_problem};
use kss_core::stability::{assemble_dense, energy_norms, energy_transformed};
use kss_core::{build_node_table, cn_norm, kss_step, Discretization, WaveState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `C^power u` through a dense DFT and the symbol `p̄ω² + q̄`.
fn metric(d: &Discretization, u: &[f64], power: f64) -> Vec<f64> {
    let n = u.len();
    let (p, q) = (d.p().mean(), d.q().mean());
    let coeffs: Vec<Complex64> = (0..n)
        .map(|k| {
            let w = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            let c: Complex64 = (0..n)
                .map(|j| u[j] * Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
                .sum();
            c * (p * w * w + q).powf(power) / n as f64
        })
        .collect();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| coeffs[k] * Complex64::from_polar(1.0, 2.0 * PI * ((j * k) % n) as f64 / n as f64))
                .sum::<Complex64>()
                .re
        })
        .collect()
}

/// `B x` with `B = diag(C^{1/2}, I) S diag(C^{-1/2}, I)`, one step at a time.
fn apply_b(d: &Discretization, dt: f64, x: &[f64]) -> Vec<f64> {
    let n = d.len();
    let s = WaveState::new(metric(d, &x[..n], -0.5), x[n..].to_vec(), 0.0).unwrap();
    let out = kss_step(&s, d, &build_node_table(d, dt).unwrap()).unwrap();
    let mut y = metric(d, &out.u, 0.5);
    y.extend(out.ut);
    y
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn probing_agrees_with_svd_norm() {
    let problem = variable_speed_problem();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [16, 32, 64] {
        let d = problem.discretization(n).unwrap();
        let dt = 2.0 * PI / n as f64;
        let reported = cn_norm(&d, dt).unwrap();
        let m = 2 * n;
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                apply_b(&d, dt, &e)
            })
            .collect();
        let b = Mat::from_fn(m, m, |i, j| cols[j][i]);
        for _ in 0..20 {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ratio = norm(&apply_b(&d, dt, &x)) / norm(&x);
            assert!(ratio <= reported * (1.0 + 1e-10), "N={n}: probe {ratio} > {reported}");
        }
        // power iteration on BᵀB from a random start
        let mut x = Mat::<f64>::from_fn(m, 1, |_, _| rng.random_range(-1.0..1.0));
        let mut sigma = 0.0;
        for _ in 0..3000 {
            x = &x * (1.0 / x.norm_l2());
            let y = b.transpose() * (&b * &x);
            sigma = y.norm_l2().sqrt();
            x = y;
        }
        assert!((sigma - reported).abs() < 1e-2 * reported, "N={n}: {sigma} vs {reported}");
    }
}

#[test]
fn gram_matrix_is_symmetric_semidefinite_and_bounds_the_norm() {
    let problem = variable_speed_problem();
    for (n, dt) in [(32, 0.1), (64, 0.05), (64, 0.3)] {
        let d = problem.discretization(n).unwrap();
        let op = assemble_dense(&d, &build_node_table(&d, dt).unwrap()).unwrap();
        let b = energy_transformed(&op, &d).unwrap();
        let g = b.transpose() * &b;
        let m = g.nrows();
        for i in 0..m {
            for j in 0..m {
                assert!((g[(i, j)] - g[(j, i)]).abs() < 1e-12 * g[(i, i)].abs().max(1.0));
            }
        }
        let sym = Mat::from_fn(m, m, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
        let lo = sym.self_adjoint_eigenvalues(Side::Lower).unwrap()[0];
        assert!(lo > -1e-10, "N={n}: {lo}");
        let norms = energy_norms(&op, &d).unwrap();
        assert!(norms.cn_norm.powi(2) <= norms.g_norm * (1.0 + 1e-12));
        let [g11, g12, g21, g22] = norms.g_norms;
        assert!(norms.g_norm <= (g11 + g12).max(g21 + g22) * (1.0 + 1e-12));
        assert!(norms.g_norm >= g11.max(g22) * (1.0 - 1e-12));
    }
}

#[test]
fn leading_block_deviation_is_second_order() {
    let problem = table1_problem();
    let d = problem.discretization(64).unwrap();
    let dts = [PI / 128.0, PI / 256.0, PI / 512.0];
    let dev: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let op = assemble_dense(&d, &build_node_table(&d, dt).unwrap()).unwrap();
            energy_norms(&op, &d).unwrap().g_norms[0] - 1.0
        })
        .collect();
    // least-squares slope of log(g11 - 1) against log Δt
    let xs: Vec<f64> = dts.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = dev.iter().map(|v| v.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}, deviations {dev:?}");
}
