//! Deterministic-versus-stochastic comparison runs and win/tie counting.
//!
//! Signs follow one convention throughout: a positive cost difference means
//! the stochastic run found the cheaper alignment, and a positive evaluation
//! difference means it needed fewer evaluations.

use serde::{Deserialize, Serialize};

use crate::bilevel::{format_table, group_thousands, optimize, BilevelError, OptimizationReport};
use crate::dfo::{SearchConfig, SolverKind};
use crate::terrain::Corridor;

/// Default tolerance sweep, in percent.
pub const DEFAULT_TOLERANCES: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

/// `(reference - other) / |reference| * 100`; equal values give exactly zero.
pub fn signed_diff_pct(reference: f64, other: f64) -> f64 {
    if reference == other {
        0.0
    } else {
        (reference - other) / reference.abs() * 100.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub corridor: String,
    pub run: usize,
    pub seed: u64,
    pub det_cost: f64,
    pub stoch_cost: f64,
    pub cost_diff_pct: f64,
    pub det_evals: usize,
    pub stoch_evals: usize,
    pub eval_diff_pct: f64,
}

impl ComparisonRow {
    pub fn new(
        corridor: &str,
        run: usize,
        seed: u64,
        (det_cost, det_evals): (f64, usize),
        (stoch_cost, stoch_evals): (f64, usize),
    ) -> Self {
        Self {
            corridor: corridor.to_string(),
            run,
            seed,
            det_cost,
            stoch_cost,
            cost_diff_pct: signed_diff_pct(det_cost, stoch_cost),
            det_evals,
            stoch_evals,
            eval_diff_pct: signed_diff_pct(det_evals as f64, stoch_evals as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    DeterministicWins,
    StochasticWins,
    Tie,
}

/// Tie when `|diff| <= tolerance` (both in percent).
pub fn outcome(diff_pct: f64, tolerance: f64) -> Outcome {
    if diff_pct.abs() <= tolerance {
        Outcome::Tie
    } else if diff_pct > 0.0 {
        Outcome::StochasticWins
    } else {
        Outcome::DeterministicWins
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Percent.
    pub tolerance: f64,
    pub deterministic_wins: usize,
    pub stochastic_wins: usize,
    pub ties: usize,
}

pub fn tolerance_sweep(diffs: &[f64], tolerances: &[f64]) -> Vec<SweepRow> {
    tolerances
        .iter()
        .map(|&tol| {
            let mut row = SweepRow {
                tolerance: tol,
                deterministic_wins: 0,
                stochastic_wins: 0,
                ties: 0,
            };
            for &d in diffs {
                match outcome(d, tol) {
                    Outcome::DeterministicWins => row.deterministic_wins += 1,
                    Outcome::StochasticWins => row.stochastic_wins += 1,
                    Outcome::Tie => row.ties += 1,
                }
            }
            row
        })
        .collect()
}

fn signed(v: f64) -> String {
    let s = format!("{v:.1}");
    if v > 0.0 && s != "0.0" {
        format!("+{s}")
    } else if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

fn cost(c: f64) -> String {
    if c.abs() >= 100.0 {
        group_thousands(c, 0)
    } else {
        group_thousands(c, 3)
    }
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let header = [
        "Corridor",
        "Run",
        "Cost det",
        "Cost stoch",
        "Cost diff (%)",
        "Evals det",
        "Evals stoch",
        "Eval diff (%)",
    ];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.corridor.clone(),
                format!("#{}", r.run),
                cost(r.det_cost),
                cost(r.stoch_cost),
                signed(r.cost_diff_pct),
                group_thousands(r.det_evals as f64, 0),
                group_thousands(r.stoch_evals as f64, 0),
                signed(r.eval_diff_pct),
            ]
        })
        .collect();
    format_table(&header, &cells)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let header = ["Tolerance", "Det wins", "Stoch wins", "Ties"];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("+/-{}%", r.tolerance),
                r.deterministic_wins.to_string(),
                r.stochastic_wins.to_string(),
                r.ties.to_string(),
            ]
        })
        .collect();
    format_table(&header, &cells)
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchResult {
    pub deterministic: Vec<(String, OptimizationReport)>,
    pub stochastic: Vec<(String, OptimizationReport)>,
    pub rows: Vec<ComparisonRow>,
    pub sweep: Vec<SweepRow>,
}

impl BenchResult {
    pub fn to_text(&self) -> String {
        format!(
            "{}\n{}",
            comparison_table(&self.rows),
            sweep_table(&self.sweep)
        )
    }
}

/// One deterministic run and one stochastic run per seed, for every corridor.
pub fn run_bench(
    corridors: &[(String, Corridor)],
    base: &SearchConfig,
    seeds: &[u64],
    tolerances: &[f64],
) -> Result<BenchResult, BilevelError> {
    let mut deterministic = Vec::new();
    let mut stochastic = Vec::new();
    let mut rows = Vec::new();
    for (name, corridor) in corridors {
        let det_cfg = SearchConfig {
            solver: SolverKind::Deterministic,
            ..base.clone()
        };
        let det = optimize(corridor, &det_cfg)?;
        for (k, &seed) in seeds.iter().enumerate() {
            let cfg = SearchConfig {
                solver: SolverKind::Stochastic,
                seed,
                ..base.clone()
            };
            log::info!("{name}: stochastic run {} (seed {seed})", k + 1);
            let st = optimize(corridor, &cfg)?;
            rows.push(ComparisonRow::new(
                name,
                k + 1,
                seed,
                (det.optimized_cost, det.evaluations),
                (st.optimized_cost, st.evaluations),
            ));
            stochastic.push((name.clone(), st));
        }
        deterministic.push((name.clone(), det));
    }
    let diffs: Vec<f64> = rows.iter().map(|r| r.cost_diff_pct).collect();
    let sweep = tolerance_sweep(&diffs, tolerances);
    Ok(BenchResult {
        deterministic,
        stochastic,
        rows,
        sweep,
    })
}
