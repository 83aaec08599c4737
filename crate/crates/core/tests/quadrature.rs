//! Block Gauss quadrature against dense matrix functions.

use faer::{Mat, Side};
use kss_core::quadrature::{block_gauss_rule, block_lanczos};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Block = [[Complex64; 2]; 2];

struct Dense {
    a: Mat<f64>,
    vals: Vec<f64>,
    vecs: Mat<f64>,
}

impl Dense {
    fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Mat::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        // Gᵀ G is symmetric positive semidefinite with a spread spectrum
        let a = Mat::from_fn(n, n, |i, j| (0..n).map(|k| g[(k, i)] * g[(k, j)]).sum());
        let evd = a.self_adjoint_eigen(Side::Lower).unwrap();
        Self {
            vals: evd.S().column_vector().iter().copied().collect(),
            vecs: evd.U().to_owned(),
            a,
        }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n).map(|i| (0..n).map(|j| x[j] * self.a[(i, j)]).sum()).collect()
    }

    /// `[u v]ᴴ f(A) [u v]` through the eigendecomposition.
    fn form(&self, f: impl Fn(f64) -> f64, u: &[Complex64], v: &[Complex64]) -> Block {
        let n = u.len();
        let proj = |x: &[Complex64], k: usize| -> Complex64 { (0..n).map(|i| x[i] * self.vecs[(i, k)]).sum() };
        let cols = [u, v];
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for k in 0..n {
            let fk = f(self.vals[k]);
            let p = [proj(cols[0], k), proj(cols[1], k)];
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += p[a].conj() * fk * p[b];
                }
            }
        }
        out
    }
}

fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn block_diff(a: &Block, b: &Block) -> f64 {
    (0..4).map(|i| (a[i / 2][i % 2] - b[i / 2][i % 2]).norm()).fold(0.0, f64::max)
}

#[test]
fn moments_are_exact_to_degree_2k_minus_1() {
    let n = 16;
    let d = Dense::random(n, 1);
    let (u, v) = (random_vec(n, 2), random_vec(n, 3));
    let scale = d.vals[n - 1];
    for k in 1..=4 {
        let rule = block_gauss_rule(|x| d.apply(x), &u, &v, k).unwrap();
        for deg in 0..2 * k {
            let f = |l: f64| (l / scale).powi(deg as i32);
            let exact = d.form(f, &u, &v);
            let err = block_diff(&rule.evaluate(f), &exact);
            let size = exact[0][0].norm().max(exact[1][1].norm());
            assert!(err < 1e-10 * size, "K={k} degree {deg}: {err:.3e}");
        }
        // one degree past the bound is generically inexact
        let f = |l: f64| (l / scale).powi(2 * k as i32);
        let exact = d.form(f, &u, &v);
        assert!(block_diff(&rule.evaluate(f), &exact) > 1e-8 * exact[0][0].norm());
    }
}

#[test]
fn exponential_converges_to_dense() {
    let n = 16;
    let d = Dense::random(n, 4);
    let (u, v) = (random_vec(n, 5), random_vec(n, 6));
    let f = |l: f64| (-0.05 * l).exp();
    let exact = d.form(f, &u, &v);
    let errs: Vec<f64> = (1..=8)
        .map(|k| block_diff(&block_gauss_rule(|x| d.apply(x), &u, &v, k).unwrap().evaluate(f), &exact))
        .collect();
    assert!(errs[2] < 1e-2 * errs[0], "{errs:?}");
    assert!(errs[7] < 1e-11, "{errs:?}");
}

#[test]
fn nodes_lie_in_the_spectrum_hull() {
    let n = 24;
    let d = Dense::random(n, 7);
    let (u, v) = (random_vec(n, 8), random_vec(n, 9));
    for k in 1..=6 {
        let t = block_lanczos(|x| d.apply(x), [&u, &v], k, true).unwrap();
        for l in t.tridiagonal.eigenvalues().unwrap() {
            assert!(l >= d.vals[0] - 1e-9 && l <= d.vals[n - 1] + 1e-9, "K={k}: {l}");
        }
    }
}

#[test]
fn rule_commutes_with_affine_maps() {
    let n = 16;
    let d = Dense::random(n, 10);
    let (u, v) = (random_vec(n, 11), random_vec(n, 12));
    let (c, s) = (2.5, 3.0);
    let k = 3;
    let base = block_gauss_rule(|x| d.apply(x), &u, &v, k).unwrap();
    let shifted = block_gauss_rule(
        |x| d.apply(x).iter().zip(x).map(|(ax, x)| c * ax + s * x).collect(),
        &u,
        &v,
        k,
    )
    .unwrap();
    for (a, b) in base.nodes().iter().zip(shifted.nodes()) {
        assert!((c * a + s - b).abs() < 1e-9 * b.abs().max(1.0));
    }
    let f = |l: f64| l.sin();
    let lhs = shifted.evaluate(f);
    let rhs = base.evaluate(|l| f(c * l + s));
    assert!(block_diff(&lhs, &rhs) < 1e-9);
}

#[test]
fn start_vector_scale_cancels_in_the_coupling_entry() {
    // The step reads entry (1, 2) of the rule for [ê, u] and divides by the scale
    // of ê, so any normalization of ê gives the same coefficient.
    let n = 24;
    let d = Dense::random(n, 20);
    let (e, u) = (random_vec(n, 21), random_vec(n, 22));
    let f = |l: f64| (0.3 * l.sqrt()).cos();
    let base = block_gauss_rule(|x| d.apply(x), &e, &u, 3).unwrap().evaluate(f)[0][1];
    for s in [1.0 / (n as f64).sqrt(), 1.0 / (2.0 * std::f64::consts::PI), 7.0] {
        let scaled: Vec<Complex64> = e.iter().map(|z| z * s).collect();
        let got = block_gauss_rule(|x| d.apply(x), &scaled, &u, 3).unwrap().evaluate(f)[0][1] / s;
        assert!((got - base).norm() < 1e-10 * base.norm(), "{s}: {got} vs {base}");
    }
}
