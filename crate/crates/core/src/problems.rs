//! Problem descriptions and the built-in experiment presets.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::discretization::{Discretization, DiscretizationKind};
use crate::error::{KssError, Result};
use crate::grid::Grid;
use crate::propagator::WaveState;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A coefficient or initial datum: constant, closed form `f(x, y)`, or grid samples.
#[derive(Clone)]
pub enum FieldSpec {
    Constant(f64),
    Function(ScalarFn),
    Samples(Arc<Vec<f64>>),
}

impl FieldSpec {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Self::Constant(c) => Ok(vec![*c; grid.len()]),
            Self::Function(f) => Ok(grid.sample(|x, y| f(x, y))),
            Self::Samples(v) if v.len() == grid.len() => Ok(v.to_vec()),
            Self::Samples(v) => Err(KssError::SizeMismatch {
                expected: grid.len(),
                found: v.len(),
            }),
        }
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Function(_) => f.write_str("Function(..)"),
            Self::Samples(v) => write!(f, "Samples(len {})", v.len()),
        }
    }
}

/// An initial-value problem `u_tt = -L u` on `(0, 2π)^d × (0, T)`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub kind: DiscretizationKind,
    pub p: FieldSpec,
    pub q: FieldSpec,
    pub u0: FieldSpec,
    pub ut0: FieldSpec,
    pub final_time: f64,
}

impl ProblemSpec {
    pub fn discretization(&self, n: usize) -> Result<Discretization> {
        let grid = Grid::new(n, self.kind.dim())?;
        let p = crate::CoefficientField::analyze(self.p.sample(&grid)?, &grid)?;
        let q = crate::CoefficientField::analyze(self.q.sample(&grid)?, &grid)?;
        Discretization::new(self.kind, grid, p, q)
    }

    /// Initial state on `disc`'s grid; the Dirichlet boundary slot is zeroed.
    pub fn initial_state(&self, disc: &Discretization) -> Result<WaveState> {
        let mut u = self.u0.sample(disc.grid())?;
        let mut ut = self.ut0.sample(disc.grid())?;
        if disc.kind() == DiscretizationKind::FdDirichlet1d {
            u[0] = 0.0;
            ut[0] = 0.0;
        }
        WaveState::new(u, ut, 0.0)
    }
}

/// `1 + ½ sin x + ¼ cos 2x + ⅛ sin 3x`.
pub fn q_trig(x: f64) -> f64 {
    1.0 + 0.5 * x.sin() + 0.25 * (2.0 * x).cos() + 0.125 * (3.0 * x).sin()
}

/// `1 + ½ sin x cos y + ¼ cos 2y + ⅛ sin 3x`.
pub fn q_trig_2d(x: f64, y: f64) -> f64 {
    1.0 + 0.5 * x.sin() * y.cos() + 0.25 * (2.0 * y).cos() + 0.125 * (3.0 * x).sin()
}

/// `1 - ½ sin x + ¼ cos 2x`.
pub fn p_variable(x: f64) -> f64 {
    1.0 - 0.5 * x.sin() + 0.25 * (2.0 * x).cos()
}

/// Hat function of height 1 centred at `π`, supported on `[π/2, 3π/2]`.
pub fn triangle(x: f64) -> f64 {
    if (PI / 2.0..=1.5 * PI).contains(&x) {
        1.0 - 2.0 / PI * (x - PI).abs()
    } else {
        0.0
    }
}

pub fn gaussian(x: f64) -> f64 {
    (-(x - PI).powi(2)).exp()
}

pub fn gaussian_2d(x: f64, y: f64) -> f64 {
    (-((x - PI).powi(2) + (y - PI).powi(2))).exp()
}

fn problem(name: &str, kind: DiscretizationKind, p: FieldSpec, q: FieldSpec, u0: FieldSpec, t: f64) -> ProblemSpec {
    ProblemSpec {
        name: name.to_string(),
        kind,
        p,
        q,
        u0,
        ut0: FieldSpec::Constant(0.0),
        final_time: t,
    }
}

/// Spectral, `p = 1`, trigonometric `q`, hat initial data.
pub fn table1_problem() -> ProblemSpec {
    problem(
        "table1",
        DiscretizationKind::SpectralPeriodic1d,
        FieldSpec::Constant(1.0),
        FieldSpec::function(|x, _| q_trig(x)),
        FieldSpec::function(|x, _| triangle(x)),
        10.0,
    )
}

/// Periodic finite differences, Gaussian initial data.
pub fn table2_problem() -> ProblemSpec {
    problem(
        "table2",
        DiscretizationKind::FdPeriodic1d,
        FieldSpec::Constant(1.0),
        FieldSpec::function(|x, _| q_trig(x)),
        FieldSpec::function(|x, _| gaussian(x)),
        10.0,
    )
}

/// Dirichlet finite differences, Gaussian initial data.
pub fn table3_problem() -> ProblemSpec {
    ProblemSpec {
        name: "table3".into(),
        kind: DiscretizationKind::FdDirichlet1d,
        ..table2_problem()
    }
}

/// Two-dimensional periodic five-point problem.
pub fn table4_problem() -> ProblemSpec {
    problem(
        "table4",
        DiscretizationKind::FdPeriodic2d,
        FieldSpec::Constant(1.0),
        FieldSpec::function(q_trig_2d),
        FieldSpec::function(gaussian_2d),
        10.0,
    )
}

/// Spectral with variable `p`, Gaussian initial data, `t ∈ (0, 1)`.
pub fn variable_speed_problem() -> ProblemSpec {
    problem(
        "variable-speed",
        DiscretizationKind::SpectralPeriodic1d,
        FieldSpec::function(|x, _| p_variable(x)),
        FieldSpec::function(|x, _| q_trig(x)),
        FieldSpec::function(|x, _| gaussian(x)),
        1.0,
    )
}

/// Grid sizes and time steps of a convergence table.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub problem: ProblemSpec,
    pub ns: Vec<usize>,
    pub dts: Vec<f64>,
}

/// Built-in convergence sweeps `table1` … `table4`.
pub fn convergence_preset(name: &str) -> Option<Sweep> {
    let one_d = || vec![256, 512, 1024, 2048];
    let fine = || vec![PI / 128.0, PI / 256.0, PI / 512.0];
    let (problem, ns, dts) = match name {
        "table1" => (table1_problem(), one_d(), fine()),
        "table2" => (table2_problem(), one_d(), fine()),
        "table3" => (table3_problem(), one_d(), fine()),
        "table4" => (table4_problem(), vec![16, 32, 64, 128], vec![PI / 8.0, PI / 16.0, PI / 32.0]),
        _ => return None,
    };
    Some(Sweep { problem, ns, dts })
}
