//! Convergence tables: KSS runs against the exact semidiscrete flow.

use std::io::Write;

use rayon::prelude::*;

use crate::discretization::{Discretization, DiscretizationKind};
use crate::error::{KssError, Result};
use crate::output::format_sci;
use crate::problems::ProblemSpec;
use crate::propagator::{integrate, WaveState};
use crate::reference::{relative_error_in, ErrorNorm, ExactPropagator};

/// Refinement factor of the fine KSS reference used when the dense one is too large.
pub const FALLBACK_REFINEMENT: f64 = 64.0;

/// How the reference solution for a grid was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceMethod {
    Exact,
    /// KSS with the given step.
    FineKss(f64),
}

/// Reference solution at `problem.final_time`; falls back to KSS with step
/// `fallback_dt` when the grid exceeds the dense limits.
pub fn reference_solution(
    problem: &ProblemSpec,
    disc: &Discretization,
    initial: &WaveState,
    fallback_dt: f64,
) -> Result<(WaveState, ReferenceMethod)> {
    match ExactPropagator::new(disc) {
        Ok(ex) => Ok((ex.propagate(initial, problem.final_time)?, ReferenceMethod::Exact)),
        Err(KssError::InvalidArgument(msg)) => {
            log::info!("{msg}; using KSS with dt = {fallback_dt:.3e} as reference");
            let s = integrate(initial, disc, fallback_dt, problem.final_time)?;
            Ok((s, ReferenceMethod::FineKss(fallback_dt)))
        }
        Err(e) => Err(e),
    }
}

/// Relative displacement errors of one run in both norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellErrors {
    pub l2: f64,
    pub max: f64,
}

impl CellErrors {
    pub fn get(&self, norm: ErrorNorm) -> f64 {
        match norm {
            ErrorNorm::L2 => self.l2,
            ErrorNorm::Max => self.max,
        }
    }
}

/// Relative errors, rows indexed by time step and columns by grid size.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub problem: String,
    pub kind: DiscretizationKind,
    pub final_time: f64,
    pub ns: Vec<usize>,
    pub dts: Vec<f64>,
    /// `cells[row][col]`; failures keep their message.
    pub cells: Vec<Vec<std::result::Result<CellErrors, String>>>,
    pub references: Vec<Option<ReferenceMethod>>,
}

impl ConvergenceTable {
    pub fn cell(&self, row: usize, col: usize, norm: ErrorNorm) -> Option<f64> {
        Some(self.cells.get(row)?.get(col)?.as_ref().ok()?.get(norm))
    }

    /// Error ratios between consecutive rows of column `col`.
    pub fn ratios(&self, col: usize, norm: ErrorNorm) -> Vec<Option<f64>> {
        (1..self.dts.len())
            .map(|r| Some(self.cell(r - 1, col, norm)? / self.cell(r, col, norm)?))
            .collect()
    }

    /// `max / min` over the cells of row `row` (`None` if any cell failed).
    pub fn row_spread(&self, row: usize, norm: ErrorNorm) -> Option<f64> {
        let vals: Option<Vec<f64>> = (0..self.ns.len()).map(|c| self.cell(row, c, norm)).collect();
        let vals = vals?;
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (r, row) in self.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Err(e) = cell {
                    out.push(format!("dt={} N={}: {e}", format_sci(self.dts[r]), self.ns[c]));
                }
            }
        }
        out
    }

    /// CSV with a header row of grid sizes and a first column of time steps.
    pub fn write_csv<W: Write>(&self, w: W, norm: ErrorNorm) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["dt".to_string()];
        header.extend(self.ns.iter().map(|n| n.to_string()));
        let io = |e: csv::Error| KssError::Internal(format!("csv: {e}"));
        wr.write_record(&header).map_err(io)?;
        for (r, dt) in self.dts.iter().enumerate() {
            let mut rec = vec![format_sci(*dt)];
            rec.extend(self.cells[r].iter().map(|c| match c {
                Ok(v) => format_sci(v.get(norm)),
                Err(_) => "NaN".to_string(),
            }));
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush().map_err(|e| KssError::Internal(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Runs every `(N, Δt)` cell to `problem.final_time` and records the relative error.
pub fn convergence_table(problem: &ProblemSpec, ns: &[usize], dts: &[f64]) -> ConvergenceTable {
    let fallback_dt = dts.iter().copied().fold(f64::INFINITY, f64::min) / FALLBACK_REFINEMENT;
    type Column = Vec<std::result::Result<CellErrors, String>>;
    let columns: Vec<(Column, Option<ReferenceMethod>)> = ns
        .par_iter()
        .map(|&n| {
            let setup = problem.discretization(n).and_then(|disc| {
                let init = problem.initial_state(&disc)?;
                let (reference, method) = reference_solution(problem, &disc, &init, fallback_dt)?;
                Ok((disc, init, reference, method))
            });
            match setup {
                Ok((disc, init, reference, method)) => {
                    let cells = dts
                        .par_iter()
                        .map(|&dt| {
                            integrate(&init, &disc, dt, problem.final_time)
                                .and_then(|s| {
                                    Ok(CellErrors {
                                        l2: relative_error_in(&s, &reference, ErrorNorm::L2)?,
                                        max: relative_error_in(&s, &reference, ErrorNorm::Max)?,
                                    })
                                })
                                .map_err(|e| e.to_string())
                        })
                        .collect();
                    (cells, Some(method))
                }
                Err(e) => (vec![Err(e.to_string()); dts.len()], None),
            }
        })
        .collect();
    let cells = (0..dts.len())
        .map(|r| columns.iter().map(|(col, _)| col[r].clone()).collect())
        .collect();
    ConvergenceTable {
        problem: problem.name.clone(),
        kind: problem.kind,
        final_time: problem.final_time,
        ns: ns.to_vec(),
        dts: dts.to_vec(),
        cells,
        references: columns.into_iter().map(|(_, m)| m).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::table2_problem;

    #[test]
    fn small_table_and_csv() {
        let mut p = table2_problem();
        p.final_time = 1.0;
        let t = convergence_table(&p, &[16, 32], &[0.1, 0.05]);
        assert!(t.failures().is_empty());
        for r in 0..2 {
            for c in 0..2 {
                assert!(t.cell(r, c, ErrorNorm::L2).unwrap() > 0.0);
                assert!(t.cell(r, c, ErrorNorm::Max).unwrap() > 0.0);
            }
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf, ErrorNorm::L2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dt,16,32\n1.00000e-01,"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn bad_grid_is_recorded_per_cell() {
        let p = table2_problem();
        let t = convergence_table(&p, &[15], &[0.1]);
        assert_eq!(t.failures().len(), 1);
        assert!(t.cell(0, 0, ErrorNorm::Max).is_none());
    }
}
