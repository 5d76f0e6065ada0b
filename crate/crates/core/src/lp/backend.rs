//! Thin wrapper around the HiGHS solver: sparse row collection, per-row
//! equilibration, deterministic single-threaded solves.

use super::{LpError, LpStatus};
use highs::{HighsModelStatus, RowProblem, Sense};

#[derive(Clone)]
pub(crate) struct LpBuilder {
    pub obj: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    lo: f64,
    hi: f64,
}

pub(crate) struct LpOutcome {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub row_duals: Option<Vec<f64>>,
}

impl LpBuilder {
    pub fn new() -> Self {
        LpBuilder { obj: Vec::new(), lower: Vec::new(), upper: Vec::new(), rows: Vec::new() }
    }

    pub fn add_var(&mut self, obj: f64, lower: f64, upper: f64) -> usize {
        self.obj.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.obj.len() - 1
    }

    /// expression >= rhs
    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, lo: rhs, hi: f64::INFINITY });
    }

    /// expression <= rhs
    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, lo: f64::NEG_INFINITY, hi: rhs });
    }

    /// Maximizes the objective. Each row is scaled by its max-abs
    /// coefficient before being handed to the solver.
    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        let mut pb = RowProblem::default();
        let mut cols = Vec::with_capacity(self.obj.len());
        for k in 0..self.obj.len() {
            cols.push(pb.add_column(self.obj[k], self.lower[k]..self.upper[k]));
        }
        for row in &self.rows {
            let scale = row
                .coeffs
                .iter()
                .map(|&(_, c)| c.abs())
                .fold(0.0f64, f64::max);
            let inv = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let coeffs: Vec<_> = row
                .coeffs
                .iter()
                .map(|&(k, c)| (cols[k], c * inv))
                .collect();
            let lo = if row.lo.is_finite() { row.lo * inv } else { row.lo };
            let hi = if row.hi.is_finite() { row.hi * inv } else { row.hi };
            pb.add_row(lo..=hi, coeffs);
        }
        let mut model = pb.optimise(Sense::Maximise);
        model.set_option("threads", 1);
        model.set_option("output_flag", false);
        model.set_option("small_matrix_value", 1e-12);
        model.set_option("primal_feasibility_tolerance", 1e-9);
        model.set_option("dual_feasibility_tolerance", 1e-9);
        let solved = model.solve();
        match solved.status() {
            HighsModelStatus::Optimal => {
                let sol = solved.get_solution();
                let primal = sol.columns().to_vec();
                let objective = primal
                    .iter()
                    .zip(&self.obj)
                    .map(|(x, c)| x * c)
                    .sum();
                Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    objective,
                    primal,
                    row_duals: Some(sol.dual_rows().to_vec()),
                })
            }
            HighsModelStatus::Infeasible => Ok(LpOutcome {
                status: LpStatus::Infeasible,
                objective: f64::NEG_INFINITY,
                primal: vec![0.0; self.obj.len()],
                row_duals: None,
            }),
            other => Err(LpError::SolverFailure(format!("solver returned {other:?}"))),
        }
    }
}
