//! Exact semidiscrete propagation of `u_tt = -L_N u` by dense eigendecomposition.

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::Discretization;
use crate::entry;
use crate::error::{check_len, KssError, Result};
use crate::propagator::WaveState;

/// Largest 1-D grid accepted by [`ExactPropagator::new`].
pub const MAX_DENSE_N_1D: usize = 4096;
/// Largest points-per-side accepted for 2-D grids.
pub const MAX_DENSE_N_2D: usize = 64;

const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Assembles `L_N` restricted to the active degrees of freedom, column by column.
pub fn assemble_operator(disc: &Discretization) -> Result<Mat<f64>> {
    let dofs: Vec<usize> = disc.active_dofs().collect();
    let m = dofs.len();
    let columns: Vec<Vec<f64>> = dofs
        .par_iter()
        .map(|&j| {
            let mut e = vec![0.0; disc.len()];
            e[j] = 1.0;
            disc.apply_l(&e)
                .map(|col| dofs.iter().map(|&i| col[i]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Mat::from_fn(m, m, |i, j| columns[j][i]))
}

/// Exact flow of the semidiscrete system, `L_N = V Λ Vᵀ`.
#[derive(Debug)]
pub struct ExactPropagator {
    dofs: Vec<usize>,
    len: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl ExactPropagator {
    pub fn new(disc: &Discretization) -> Result<Self> {
        let n = disc.grid().n();
        let limit = if disc.grid().dim() == 1 {
            MAX_DENSE_N_1D
        } else {
            MAX_DENSE_N_2D
        };
        if n > limit {
            return Err(KssError::InvalidArgument(format!(
                "dense reference limited to N <= {limit} per side, got {n}"
            )));
        }
        let a = assemble_operator(disc)?;
        let m = a.nrows();
        let mut scale = 0.0_f64;
        let mut asym = 0.0_f64;
        for j in 0..m {
            for i in 0..m {
                scale = scale.max(a[(i, j)].abs());
                asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOLERANCE * scale.max(1.0) {
            return Err(KssError::Internal(format!(
                "assembled operator is not symmetric (deviation {asym:.3e})"
            )));
        }
        let sym = Mat::from_fn(m, m, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let evd = sym
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| KssError::LinearAlgebra(format!("{e:?}")))?;
        let eigenvalues = evd.S().column_vector().iter().copied().collect();
        Ok(Self {
            dofs: disc.active_dofs().collect(),
            len: disc.len(),
            eigenvalues,
            eigenvectors: evd.U().to_owned(),
        })
    }

    /// Eigenvalues of `L_N` in nondecreasing order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn to_eigen(&self, g: &[f64]) -> Vec<f64> {
        let v = &self.eigenvectors;
        (0..v.ncols())
            .into_par_iter()
            .map(|k| self.dofs.iter().enumerate().map(|(i, &d)| v[(i, k)] * g[d]).sum())
            .collect()
    }

    fn from_eigen(&self, c: &[f64]) -> Vec<f64> {
        let v = &self.eigenvectors;
        let mut out = vec![0.0; self.len];
        let vals: Vec<f64> = (0..v.nrows())
            .into_par_iter()
            .map(|i| c.iter().enumerate().map(|(k, ck)| v[(i, k)] * ck).sum())
            .collect();
        for (i, &d) in self.dofs.iter().enumerate() {
            out[d] = vals[i];
        }
        out
    }

    /// Propagates `state` by `t` (which may be negative).
    pub fn propagate(&self, state: &WaveState, t: f64) -> Result<WaveState> {
        check_len(self.len, state.u.len())?;
        check_len(self.len, state.ut.len())?;
        let a = self.to_eigen(&state.u);
        let b = self.to_eigen(&state.ut);
        let mut ca = Vec::with_capacity(a.len());
        let mut cb = Vec::with_capacity(a.len());
        for ((&l, &a), &b) in self.eigenvalues.iter().zip(&a).zip(&b) {
            let f = entry::propagator_entries(l, t);
            ca.push(f[0][0] * a + f[0][1] * b);
            cb.push(f[1][0] * a + f[1][1] * b);
        }
        Ok(WaveState {
            u: self.from_eigen(&ca),
            ut: self.from_eigen(&cb),
            time: state.time + t,
        })
    }
}

/// Discrete energy `⟨u, L_N u⟩ + ‖u_t‖²` (unscaled Euclidean inner products).
pub fn energy(disc: &Discretization, state: &WaveState) -> Result<f64> {
    let lu = disc.apply_l(&state.u)?;
    Ok(disc
        .active_dofs()
        .map(|i| state.u[i] * lu[i] + state.ut[i] * state.ut[i])
        .sum())
}

/// Norm used for relative errors of the displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorNorm {
    L2,
    Max,
}

impl ErrorNorm {
    pub fn name(self) -> &'static str {
        match self {
            Self::L2 => "l2",
            Self::Max => "max",
        }
    }

    fn of(self, v: impl Iterator<Item = f64>) -> f64 {
        match self {
            Self::L2 => v.map(|x| x * x).sum::<f64>().sqrt(),
            Self::Max => v.map(f64::abs).fold(0.0, f64::max),
        }
    }
}

/// `‖u_approx - u_ref‖₂ / ‖u_ref‖₂` on the displacement.
pub fn relative_error(approx: &WaveState, reference: &WaveState) -> Result<f64> {
    relative_error_in(approx, reference, ErrorNorm::L2)
}

pub fn relative_error_in(approx: &WaveState, reference: &WaveState, norm: ErrorNorm) -> Result<f64> {
    check_len(reference.u.len(), approx.u.len())?;
    let denom = norm.of(reference.u.iter().copied());
    if denom == 0.0 {
        return Err(KssError::ZeroReference);
    }
    let diff = norm.of(approx.u.iter().zip(&reference.u).map(|(a, b)| a - b));
    Ok(diff / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::DiscretizationKind;

    #[test]
    fn single_mode_closed_form() {
        let d = Discretization::from_fns(DiscretizationKind::SpectralPeriodic1d, 16, |_, _| 2.0, |_, _| 0.5).unwrap();
        let ex = ExactPropagator::new(&d).unwrap();
        let u0 = d.grid().sample(|x, _| x.sin());
        let s = ex.propagate(&WaveState::new(u0.clone(), vec![0.0; 16], 0.0).unwrap(), 1.3).unwrap();
        let c = (2.5f64.sqrt() * 1.3).cos();
        for j in 0..16 {
            assert!((s.u[j] - c * u0[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn relative_error_scaling() {
        let r = WaveState::new(vec![1.0, -2.0, 3.0], vec![0.0; 3], 0.0).unwrap();
        let a = WaveState::new(r.u.iter().map(|v| 1.01 * v).collect(), vec![0.0; 3], 0.0).unwrap();
        assert_eq!(relative_error(&r, &r).unwrap(), 0.0);
        assert!((relative_error(&a, &r).unwrap() - 0.01).abs() < 1e-14);
        let z = WaveState::zeros(3);
        assert_eq!(relative_error(&a, &z), Err(KssError::ZeroReference));
        let m = relative_error_in(&a, &r, ErrorNorm::Max).unwrap();
        assert!((m - 0.01).abs() < 1e-14);
    }

    #[test]
    fn size_guard() {
        let d = Discretization::from_fns(DiscretizationKind::FdPeriodic2d, 128, |_, _| 1.0, |_, _| 1.0).unwrap();
        assert!(ExactPropagator::new(&d).is_err());
    }
}
