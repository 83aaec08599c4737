//! Block Lanczos iteration and block Gauss quadrature for bilinear forms
//! `[u v]^H f(A) [u v]`, plus the block-KSS wave step built on them.
//!
//! This path is a reference oracle: each mode runs its own Lanczos iteration,
//! so a step costs `O(N² log N)`.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::entry;
use crate::error::{check_len, KssError, Result};
use crate::propagator::WaveState;

/// A block is rank deficient when `σ_min < BREAKDOWN_TOLERANCE · σ_max`.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-12;

type Block = [[Complex64; 2]; 2];
type Column = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `a -= b * s`
fn axpy(a: &mut [Complex64], b: &[Complex64], s: Complex64) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x -= y * s);
}

fn scale(a: &mut [Complex64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

/// Singular values `(σ_max, σ_min)` of a 2×2 block.
fn singular_values(b: &Block) -> (f64, f64) {
    // eigenvalues of BᴴB
    let g11 = b[0][0].norm_sqr() + b[1][0].norm_sqr();
    let g22 = b[0][1].norm_sqr() + b[1][1].norm_sqr();
    let g12 = b[0][0].conj() * b[0][1] + b[1][0].conj() * b[1][1];
    let tr = g11 + g22;
    let det = (g11 * g22 - g12.norm_sqr()).max(0.0);
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let hi = tr / 2.0 + disc;
    let lo = (det / hi.max(f64::MIN_POSITIVE)).max(0.0);
    (hi.sqrt(), lo.sqrt())
}

/// Outcome of orthonormalizing two columns.
struct Qr {
    q: [Column; 2],
    r: Block,
    /// Number of columns that were numerically independent.
    rank: usize,
}

/// Classical Gram–Schmidt with reorthogonalization. Dependent columns are
/// replaced by zero vectors and reported through `rank`.
fn qr2(a0: &[Complex64], a1: &[Complex64]) -> Qr {
    let n0 = norm(a0);
    let n1 = norm(a1);
    let big = n0.max(n1);
    let mut r = [[ZERO; 2]; 2];
    if big == 0.0 {
        return Qr {
            q: [vec![ZERO; a0.len()], vec![ZERO; a0.len()]],
            r,
            rank: 0,
        };
    }
    // keep the larger column first so a tiny leading column cannot be amplified
    let swap = n0 < BREAKDOWN_TOLERANCE * big;
    let (first, second) = if swap { (a1, a0) } else { (a0, a1) };
    let mut q0 = first.to_vec();
    let r00 = norm(&q0);
    scale(&mut q0, 1.0 / r00);
    let mut q1 = second.to_vec();
    let mut r01 = ZERO;
    for _ in 0..2 {
        let c = dot(&q0, &q1);
        axpy(&mut q1, &q0, c);
        r01 += c;
    }
    let r11 = norm(&q1);
    let rank = if r11 < BREAKDOWN_TOLERANCE * big { 1 } else { 2 };
    if rank == 2 {
        scale(&mut q1, 1.0 / r11);
    } else {
        q1.iter_mut().for_each(|x| *x = ZERO);
    }
    let r11 = if rank == 2 { r11 } else { 0.0 };
    if swap {
        // a1 = q0 r00, a0 = q0 r01 + q1 r11
        r[0][1] = Complex64::new(r00, 0.0);
        r[0][0] = r01;
        r[1][0] = Complex64::new(r11, 0.0);
    } else {
        r[0][0] = Complex64::new(r00, 0.0);
        r[0][1] = r01;
        r[1][1] = Complex64::new(r11, 0.0);
    }
    Qr { q: [q0, q1], r, rank }
}

/// Block tridiagonal matrix produced by block Lanczos.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    /// Diagonal blocks `M_1 … M_K`.
    pub m_blocks: Vec<Block>,
    /// Subdiagonal blocks `B_1 … B_{K-1}`.
    pub b_blocks: Vec<Block>,
}

impl BlockTridiagonal {
    pub fn num_blocks(&self) -> usize {
        self.m_blocks.len()
    }

    /// The assembled `2K × 2K` Hermitian matrix.
    pub fn assembled(&self) -> Mat<Complex64> {
        let k = self.m_blocks.len();
        let mut t = Mat::<Complex64>::zeros(2 * k, 2 * k);
        for (j, m) in self.m_blocks.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    t[(2 * j + a, 2 * j + b)] = m[a][b];
                }
            }
        }
        for (j, bb) in self.b_blocks.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    t[(2 * j + 2 + a, 2 * j + b)] = bb[a][b];
                    t[(2 * j + b, 2 * j + 2 + a)] = bb[a][b].conj();
                }
            }
        }
        t
    }

    /// Eigenvalues (Gauss nodes) in nondecreasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.assembled()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| KssError::LinearAlgebra(format!("{e:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOutput {
    pub tridiagonal: BlockTridiagonal,
    /// True if the iteration stopped early on a rank-deficient block.
    pub breakdown: bool,
}

/// Block Lanczos on the Hermitian operator `apply_a` from the block `x1`,
/// which is orthonormalized first.
///
/// A rank-deficient starting block is completed with the normalized Krylov
/// residual of its first column, so `K = 1` on such a block still integrates
/// the first column's form exactly up to degree 3.
pub fn block_lanczos<F>(apply_a: F, x1: [&[Complex64]; 2], k: usize, full_reorth: bool) -> Result<LanczosOutput>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let n = x1[0].len();
    check_len(n, x1[1].len())?;
    if k == 0 {
        return Err(KssError::InvalidArgument("block Lanczos needs K >= 1".into()));
    }
    if 2 * k > n {
        return Err(KssError::InvalidArgument(format!("2K = {} exceeds N = {n}", 2 * k)));
    }
    let qr = qr2(x1[0], x1[1]);
    if qr.rank == 0 {
        return Err(KssError::InvalidArgument("starting block is zero".into()));
    }
    let mut x = qr.q;
    if qr.rank == 1 {
        x[1] = completion(&apply_a, &x[0])?;
    }
    run_lanczos(apply_a, x, k, full_reorth)
}

/// A unit vector orthogonal to `q`, taken from the Krylov residual `A q - q (qᴴ A q)`.
fn completion<F>(apply_a: &F, q: &[Complex64]) -> Result<Column>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut w = apply_a(q);
    let scale_ref = norm(&w).max(1.0);
    for _ in 0..2 {
        let c = dot(q, &w);
        axpy(&mut w, q, c);
    }
    let nw = norm(&w);
    if nw > BREAKDOWN_TOLERANCE * scale_ref {
        scale(&mut w, 1.0 / nw);
        return Ok(w);
    }
    // q spans an invariant subspace; any orthogonal direction will do
    for j in 0..q.len() {
        let mut e = vec![ZERO; q.len()];
        e[j] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            let c = dot(q, &e);
            axpy(&mut e, q, c);
        }
        let ne = norm(&e);
        if ne > 0.5 {
            scale(&mut e, 1.0 / ne);
            return Ok(e);
        }
    }
    Err(KssError::Internal("no orthogonal completion found".into()))
}

fn run_lanczos<F>(apply_a: F, x1: [Column; 2], k: usize, full_reorth: bool) -> Result<LanczosOutput>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut history: Vec<[Column; 2]> = Vec::with_capacity(k);
    let mut m_blocks = Vec::with_capacity(k);
    let mut b_blocks: Vec<Block> = Vec::with_capacity(k.saturating_sub(1));
    let mut x = x1;
    let mut breakdown = false;
    for j in 0..k {
        let mut w = [apply_a(&x[0]), apply_a(&x[1])];
        let mut m = [[ZERO; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = dot(&x[a], &w[b]);
            }
        }
        // enforce Hermitian symmetry of the diagonal block
        let off = 0.5 * (m[0][1] + m[1][0].conj());
        m[0][1] = off;
        m[1][0] = off.conj();
        m[0][0].im = 0.0;
        m[1][1].im = 0.0;
        m_blocks.push(m);
        if j + 1 == k {
            break;
        }
        // W -= X M + X_prev B_prevᴴ
        for b in 0..2 {
            for a in 0..2 {
                axpy(&mut w[b], &x[a], m[a][b]);
            }
        }
        if let (Some(prev), Some(bp)) = (history.last(), b_blocks.last()) {
            for b in 0..2 {
                for a in 0..2 {
                    axpy(&mut w[b], &prev[a], bp[b][a].conj());
                }
            }
        }
        history.push(x.clone());
        if full_reorth {
            for _ in 0..2 {
                for block in &history {
                    for q in block {
                        for col in w.iter_mut() {
                            let c = dot(q, col);
                            axpy(col, q, c);
                        }
                    }
                }
            }
        }
        let qr = qr2(&w[0], &w[1]);
        let (smax, smin) = singular_values(&qr.r);
        if qr.rank < 2 || smin < BREAKDOWN_TOLERANCE * smax.max(f64::MIN_POSITIVE) {
            breakdown = true;
            log::debug!("block Lanczos breakdown after {} blocks", j + 1);
            break;
        }
        b_blocks.push(qr.r);
        x = qr.q;
    }
    Ok(LanczosOutput {
        tridiagonal: BlockTridiagonal { m_blocks, b_blocks },
        breakdown,
    })
}

/// Gauss rule from a block tridiagonal matrix, ready to integrate any `f`.
#[derive(Debug, Clone)]
pub struct BlockGaussRule {
    nodes: Vec<f64>,
    /// First two rows of the eigenvector matrix, `weights[a][node]`.
    weights: [Vec<Complex64>; 2],
    b0: Block,
    pub breakdown: bool,
}

impl BlockGaussRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `B₀ᴴ [f(T)]_{1:2,1:2} B₀`.
    pub fn evaluate(&self, f: impl Fn(f64) -> f64) -> Block {
        let fv: Vec<f64> = self.nodes.iter().map(|&l| f(l)).collect();
        let mut inner = [[ZERO; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                inner[a][b] = fv
                    .iter()
                    .enumerate()
                    .map(|(k, f)| self.weights[a][k] * self.weights[b][k].conj() * *f)
                    .sum();
            }
        }
        let b = &self.b0;
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut s = ZERO;
                for a in 0..2 {
                    for c in 0..2 {
                        s += b[a][i].conj() * inner[a][c] * b[c][j];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    }
}

/// Builds the rule approximating `[u v]ᴴ f(A) [u v]` with `K` block steps.
pub fn block_gauss_rule<F>(apply_a: F, u: &[Complex64], v: &[Complex64], k: usize) -> Result<BlockGaussRule>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    check_len(u.len(), v.len())?;
    let qr = qr2(u, v);
    if qr.rank == 0 {
        return Ok(BlockGaussRule {
            nodes: vec![],
            weights: [vec![], vec![]],
            b0: [[ZERO; 2]; 2],
            breakdown: false,
        });
    }
    let mut x = qr.q;
    if qr.rank == 1 {
        x[1] = completion(&apply_a, &x[0])?;
    }
    if 2 * k > u.len() {
        return Err(KssError::InvalidArgument(format!("2K = {} exceeds N = {}", 2 * k, u.len())));
    }
    let out = run_lanczos(apply_a, x, k, false)?;
    let t = out.tridiagonal.assembled();
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| KssError::LinearAlgebra(format!("{e:?}")))?;
    let m = t.nrows();
    let nodes = (0..m).map(|i| evd.S().column_vector()[i].re).collect();
    let uu = evd.U();
    let weights = [
        (0..m).map(|k| uu[(0, k)]).collect(),
        (0..m).map(|k| uu[(1, k)]).collect(),
    ];
    Ok(BlockGaussRule {
        nodes,
        weights,
        b0: qr.r,
        breakdown: out.breakdown,
    })
}

/// `[u v]ᴴ f(A) [u v]` by `K`-step block Gauss quadrature.
pub fn block_quadrature<F>(
    f: impl Fn(f64) -> f64,
    u: &[Complex64],
    v: &[Complex64],
    apply_a: F,
    k: usize,
) -> Result<Block>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    Ok(block_gauss_rule(apply_a, u, v, k)?.evaluate(f))
}

/// Applies a real operator to a complex vector, part by part.
fn complex_apply(disc: &Discretization, x: &[Complex64]) -> Vec<Complex64> {
    let re: Vec<f64> = x.iter().map(|c| c.re).collect();
    let im: Vec<f64> = x.iter().map(|c| c.im).collect();
    let a = disc.apply_l(&re).expect("length checked by caller");
    let b = disc.apply_l(&im).expect("length checked by caller");
    a.into_iter().zip(b).map(|(r, i)| Complex64::new(r, i)).collect()
}

/// Block-KSS step: every Fourier coefficient from its own `K`-step block Gauss rules.
///
/// Periodic kinds only. Returns the new state and whether any mode broke down.
pub fn kss_step_lanczos(state: &WaveState, disc: &Discretization, dt: f64, k: usize) -> Result<(WaveState, bool)> {
    if !disc.kind().is_periodic() {
        return Err(KssError::Unsupported(
            "block-Lanczos step needs a periodic discretization".into(),
        ));
    }
    check_len(disc.len(), state.u.len())?;
    check_len(disc.len(), state.ut.len())?;
    let n = disc.len();
    let sqrt_n = (n as f64).sqrt();
    let u: Column = state.u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let ut: Column = state.ut.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let apply = |x: &[Complex64]| complex_apply(disc, x);
    let results: Vec<(Complex64, Complex64, bool)> = (0..n)
        .into_par_iter()
        .map(|slot| {
            // ê_ω as a unit vector
            let mut e = vec![ZERO; n];
            e[slot] = Complex64::new(1.0, 0.0);
            let e = disc.transform().inverse_complex(&e)?;
            let e: Column = e.into_iter().map(|c| c / sqrt_n).collect();
            let ru = block_gauss_rule(apply, &e, &u, k)?;
            let rv = block_gauss_rule(apply, &e, &ut, k)?;
            let c_u = ru.evaluate(|l| entry::cos_sqrt(l, dt))[0][1];
            let s_u = ru.evaluate(|l| entry::neg_sqrt_sin(l, dt))[0][1];
            let c_v = rv.evaluate(|l| entry::cos_sqrt(l, dt))[0][1];
            let s_v = rv.evaluate(|l| entry::sinc_sqrt(l, dt))[0][1];
            Ok(((c_u + s_v) / sqrt_n, (s_u + c_v) / sqrt_n, ru.breakdown || rv.breakdown))
        })
        .collect::<Result<_>>()?;
    let uh: Column = results.iter().map(|r| r.0).collect();
    let vh: Column = results.iter().map(|r| r.1).collect();
    let breakdown = results.iter().any(|r| r.2);
    Ok((
        WaveState {
            u: disc.inverse(&uh)?,
            ut: disc.inverse(&vh)?,
            time: state.time + dt,
        },
        breakdown,
    ))
}
