//! Krylov subspace spectral (KSS) time stepping for `u_tt = (p u_x)_x - q u`.
//!
//! Each Fourier (or sine) coefficient of the solution is advanced by
//! interpolating `cos(√λ Δt)`, `λ^{-1/2} sin(√λ Δt)` and friends at two
//! prescribed nodes, `0` and the symbol of the constant-coefficient operator.
//! [`kss_step`] is the whole method; everything else measures it.

pub mod coefficient;
pub mod convergence;
pub mod discretization;
pub mod dusty;
pub mod entry;
mod error;
pub mod grid;
pub mod output;
pub mod problems;
pub mod propagator;
pub mod quadrature;
pub mod reference;
pub mod stability;
pub mod transform;

pub use coefficient::{Bandlimit, CoefficientField};
pub use convergence::{convergence_table, CellErrors, ConvergenceTable};
pub use discretization::{Discretization, DiscretizationKind};
pub use dusty::{run_dusty_gas, DustyGasParams, DustyRun, DustyRunConfig};
pub use error::{KssError, Result};
pub use grid::Grid;
pub use problems::{FieldSpec, ProblemSpec};
pub use propagator::{
    build_node_table, build_source_table, integrate, integrate_monitored, kss_step,
    kss_step_with_source, NodeTable, RunSummary, SourceEntryTable, WaveState,
};
pub use reference::{relative_error, relative_error_in, ErrorNorm, ExactPropagator};
pub use stability::{cn_norm, stability_scan, StabilityReport, StabilityScan};
pub use transform::SpectralTransform;
