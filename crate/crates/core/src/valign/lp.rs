//! Sparse linear program model solved with a bounded-variable revised
//! simplex.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;
use thiserror::Error;

const FEAS_TOL: f64 = 1e-8;
/// Values this close to a finite bound are snapped onto it.
const SNAP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// `min c'x` subject to sparse rows `a_i' x (<=|=|>=) b_i` and `lo <= x <= hi`.
/// Bounds may be infinite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    costs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    senses: Vec<RowSense>,
    rhs: Vec<f64>,
    /// `(row, column, value)`
    triplets: Vec<(usize, usize, f64)>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.costs.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.costs.len() - 1
    }

    pub fn add_row(&mut self, coefs: &[(usize, f64)], sense: RowSense, rhs: f64) -> usize {
        let row = self.senses.len();
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.triplets.extend(
            coefs
                .iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|&(c, v)| (row, c, v)),
        );
        row
    }

    pub fn n_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn n_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn row(&self, row: usize) -> (RowSense, f64) {
        (self.senses[row], self.rhs[row])
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.costs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.n_rows()];
        for &(r, c, v) in &self.triplets {
            act[r] += v * x[c];
        }
        act
    }

    /// Largest scaled violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut scale = vec![1.0; self.n_rows()];
        for &(r, c, v) in &self.triplets {
            scale[r] += (v * x[c]).abs();
        }
        let act = self.row_activity(x);
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows() {
            let d = act[r] - self.rhs[r];
            let viol = match self.senses[r] {
                RowSense::Le => d.max(0.0),
                RowSense::Ge => (-d).max(0.0),
                RowSense::Eq => d.abs(),
            };
            worst = worst.max(viol / (scale[r] + self.rhs[r].abs()));
        }
        for (j, &v) in x.iter().enumerate() {
            let viol = (self.lower[j] - v).max(v - self.upper[j]).max(0.0);
            worst = worst.max(viol / (1.0 + v.abs()));
        }
        worst
    }

    fn validate(&self) -> Result<(), LpError> {
        let bad = |m: String| Err(LpError::Malformed(m));
        for j in 0..self.n_vars() {
            if !self.costs[j].is_finite() {
                return bad(format!("cost of variable {j} is not finite"));
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return bad(format!("variable {j} has invalid bounds [{lo}, {hi}]"));
            }
        }
        if let Some(r) = self.rhs.iter().position(|b| !b.is_finite()) {
            return bad(format!("rhs of row {r} is not finite"));
        }
        for &(r, c, v) in &self.triplets {
            if r >= self.n_rows() || c >= self.n_vars() || !v.is_finite() {
                return bad(format!("bad matrix entry ({r}, {c}) = {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
}

fn snap(v: f64, lo: f64, hi: f64) -> f64 {
    if lo.is_finite() && (v - lo).abs() <= SNAP_TOL * (1.0 + lo.abs()) {
        lo
    } else if hi.is_finite() && (v - hi).abs() <= SNAP_TOL * (1.0 + hi.abs()) {
        hi
    } else {
        v
    }
}

/// Solves `lp` to optimality, or reports infeasibility / unboundedness.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.n_vars();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n)
        .map(|j| problem.add_var(lp.costs[j], (lp.lower[j], lp.upper[j])))
        .collect();
    let mut rows: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); lp.n_rows()];
    for &(r, c, v) in &lp.triplets {
        rows[r].push((vars[c], v));
    }
    for (r, coefs) in rows.iter().enumerate() {
        let op = match lp.senses[r] {
            RowSense::Le => ComparisonOp::Le,
            RowSense::Eq => ComparisonOp::Eq,
            RowSense::Ge => ComparisonOp::Ge,
        };
        problem.add_constraint(coefs.as_slice(), op, lp.rhs[r]);
    }
    let outcome = match problem.solve() {
        Ok(outcome) => outcome,
        Err(microlp::Error::Infeasible) => {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
            })
        }
        Err(microlp::Error::Unbounded) => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: vec![0.0; n],
                objective: f64::NEG_INFINITY,
            })
        }
        Err(e) => return Err(LpError::Numerical(e.to_string())),
    };
    let Some(solution) = outcome.solution() else {
        return Err(LpError::Numerical("solve interrupted".into()));
    };
    let x: Vec<f64> = (0..n)
        .map(|j| snap(solution.var_value_raw(vars[j]), lp.lower[j], lp.upper[j]))
        .collect();
    let violation = lp.max_violation(&x);
    if violation > FEAS_TOL {
        return Err(LpError::Numerical(format!("primal residual {violation:e}")));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective(&x),
        x,
    })
}
