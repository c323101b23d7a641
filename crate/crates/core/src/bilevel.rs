//! The outer objective: alignment variables in, optimal earthwork cost out.

use serde::Serialize;
use thiserror::Error;

use crate::dfo::{
    self, BlackBox, DfoError, Evaluation, SearchConfig, SolverKind, Termination, TraceEntry,
};
use crate::feasibility::{assess, FeasibilityReport};
use crate::geometry::{Alignment, GeometryError};
use crate::point::Point;
use crate::terrain::Corridor;
use crate::valign::{valign_cost, VAlignProblem, VAlignSolution, ValignError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilevelError {
    #[error("outer vector has length {got}, corridor needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(
        "baseline alignment is infeasible; repair the corridor boxes, radii or stations ({0})"
    )]
    InfeasibleBaseline(String),
    #[error(transparent)]
    Search(#[from] DfoError),
}

/// Flattens the interior points and radii as `(x_1, y_1, r_1, ..., x_{n-2}, y_{n-2}, r_{n-2})`.
pub fn pack(alignment: &Alignment) -> Vec<f64> {
    let pts = alignment.points();
    let radii = alignment.radii();
    (1..pts.len() - 1)
        .flat_map(|i| [pts[i].x, pts[i].y, radii[i]])
        .collect()
}

/// Inverse of [`pack`], reattaching the corridor's fixed endpoints.
pub fn unpack(corridor: &Corridor, v: &[f64]) -> Result<Alignment, BilevelError> {
    let interior = corridor.n_points() - 2;
    if v.len() != 3 * interior {
        return Err(BilevelError::Dimension {
            expected: 3 * interior,
            got: v.len(),
        });
    }
    let mut points = Vec::with_capacity(interior + 2);
    points.push(corridor.start);
    points.extend(v.chunks_exact(3).map(|c| Point::new(c[0], c[1])));
    points.push(corridor.end);
    let radii = v.chunks_exact(3).map(|c| c[2]).collect();
    Ok(Alignment::from_parts(points, radii)?)
}

/// Everything known about one alignment: the constraint verdict and, when
/// feasible, the inner problem and its optimum.
#[derive(Clone, Debug, Serialize)]
pub struct AlignmentEvaluation {
    pub feasibility: FeasibilityReport,
    pub chainages: Vec<f64>,
    pub elevations: Vec<f64>,
    pub cost: Option<f64>,
    pub solution: Option<VAlignSolution>,
    pub inner_error: Option<String>,
}

impl AlignmentEvaluation {
    pub fn verdict(&self) -> Evaluation {
        match self.cost {
            Some(cost) => Evaluation::Finite { cost },
            None => Evaluation::Infeasible {
                inner_skipped: !self.feasibility.feasible,
            },
        }
    }
}

/// Ground-line inner problem along a contained path.
pub fn inner_problem(
    corridor: &Corridor,
    report: &FeasibilityReport,
) -> Result<VAlignProblem, ValignError> {
    let mut chainages = Vec::with_capacity(report.containment.len());
    let mut elevations = Vec::with_capacity(report.containment.len());
    for (c, st) in report.containment.iter().zip(&corridor.stations) {
        let (Some(t), Some(s)) = (c.t, c.chainage) else {
            return Err(ValignError::Problem(format!(
                "station {} not crossed",
                c.station
            )));
        };
        let h = st
            .ground_elevation(t)
            .map_err(|e| ValignError::Problem(format!("station {}: {e}", c.station)))?;
        chainages.push(s);
        elevations.push(h);
    }
    VAlignProblem::new(chainages, elevations, corridor.valign.clone())
}

pub fn evaluate_alignment(corridor: &Corridor, alignment: &Alignment) -> AlignmentEvaluation {
    let feasibility = assess(corridor, alignment);
    let mut out = AlignmentEvaluation {
        feasibility,
        chainages: Vec::new(),
        elevations: Vec::new(),
        cost: None,
        solution: None,
        inner_error: None,
    };
    if !out.feasibility.feasible {
        return out;
    }
    let solved = inner_problem(corridor, &out.feasibility).and_then(|problem| {
        out.chainages = problem.chainages.clone();
        out.elevations = problem.elevations.clone();
        valign_cost(&problem)
    });
    match solved {
        Ok(sol) => {
            out.cost = Some(sol.cost);
            out.solution = Some(sol);
        }
        Err(e) => out.inner_error = Some(e.to_string()),
    }
    out
}

/// The barrier objective `f(v)`.
pub fn evaluate(corridor: &Corridor, v: &[f64]) -> Evaluation {
    let alignment = match unpack(corridor, v) {
        Ok(a) => a,
        Err(_) => {
            return Evaluation::Infeasible {
                inner_skipped: true,
            }
        }
    };
    let result = evaluate_alignment(corridor, &alignment);
    if let Some(e) = &result.inner_error {
        log::warn!("inner solve failed at {v:?}: {e}");
    }
    result.verdict()
}

/// A corridor viewed as a black box over outer vectors.
pub struct CorridorBlackBox<'a> {
    pub corridor: &'a Corridor,
}

impl BlackBox for CorridorBlackBox<'_> {
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        evaluate(self.corridor, x)
    }
}

/// Result of one optimization run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub solver: SolverKind,
    /// Present for the stochastic solver only.
    pub seed: Option<u64>,
    pub initial_cost: f64,
    pub optimized_cost: f64,
    pub improvement_pct: f64,
    pub evaluations: usize,
    pub inner_solves: usize,
    pub cache_hits: usize,
    pub wall_clock_s: f64,
    pub termination: Termination,
    pub initial_alignment: Alignment,
    pub best_alignment: Alignment,
    pub trace: Vec<TraceEntry>,
}

/// `(initial - optimized) / initial * 100`, zero when `initial` is zero.
pub fn improvement_pct(initial: f64, optimized: f64) -> f64 {
    if initial == 0.0 {
        0.0
    } else {
        (initial - optimized) / initial * 100.0
    }
}

/// Formats with comma thousands separators.
pub fn group_thousands(value: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, value.abs());
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s.as_str(), None),
    };
    let mut grouped = String::new();
    for (k, ch) in int.chars().enumerate() {
        if k > 0 && (int.len() - k) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    if let Some(f) = frac {
        grouped.push('.');
        grouped.push_str(f);
    }
    let negative = value < 0.0 && s.chars().any(|c| c.is_ascii_digit() && c != '0');
    if negative {
        grouped.insert(0, '-');
    }
    grouped
}

fn cost_cell(c: f64) -> String {
    if c.abs() >= 100.0 {
        group_thousands(c, 0)
    } else {
        group_thousands(c, 2)
    }
}

pub const TABLE_HEADER: [&str; 6] = [
    "Road",
    "Initial cost",
    "Optimized cost",
    "Improvement (%)",
    "Evaluations",
    "Wall-clock (s)",
];

impl OptimizationReport {
    /// Table cells in [`TABLE_HEADER`] order.
    pub fn table_cells(&self, name: &str) -> [String; 6] {
        [
            name.to_string(),
            cost_cell(self.initial_cost),
            cost_cell(self.optimized_cost),
            format!("{:.1}", self.improvement_pct),
            group_thousands(self.evaluations as f64, 0),
            format!("{:.2}", self.wall_clock_s),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Right-aligned text table, first column left-aligned.
pub fn format_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (k, c) in cells.iter().enumerate() {
            if k == 0 {
                s.push_str(&format!("{:<w$}", c, w = widths[0]));
            } else {
                s.push_str(&format!("  {:>w$}", c, w = widths[k]));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

/// Table of named runs with the standard column set.
pub fn report_table(rows: &[(String, &OptimizationReport)]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| r.table_cells(name).to_vec())
        .collect();
    format_table(&TABLE_HEADER, &cells)
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = std::time::Instant::now();
    let out = f();
    (out, t0.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// Optimizes the corridor starting from its baseline alignment.
pub fn optimize(
    corridor: &Corridor,
    cfg: &SearchConfig,
) -> Result<OptimizationReport, BilevelError> {
    let initial_alignment = corridor.baseline();
    let x0 = pack(&initial_alignment);
    let start = evaluate_alignment(corridor, &initial_alignment);
    if start.cost.is_none() {
        let reason = start
            .inner_error
            .or(start.feasibility.path_error)
            .unwrap_or_else(|| "constraint violated; run `validate` for details".into());
        return Err(BilevelError::InfeasibleBaseline(reason));
    }
    let bb = CorridorBlackBox { corridor };
    let (run, wall_clock_s) = timed(|| dfo::run(&bb, &x0, cfg));
    let run = run?;
    let best_alignment = unpack(corridor, &run.best_point)?;
    let initial_cost = run.trace[0].cost;
    Ok(OptimizationReport {
        solver: cfg.solver,
        seed: (cfg.solver == SolverKind::Stochastic).then_some(cfg.seed),
        initial_cost,
        optimized_cost: run.best_cost,
        improvement_pct: improvement_pct(initial_cost, run.best_cost),
        evaluations: run.evaluations,
        inner_solves: run.inner_solves,
        cache_hits: run.cache_hits,
        wall_clock_s,
        termination: run.termination,
        initial_alignment,
        best_alignment,
        trace: run.trace,
    })
}
