//! Derivative-free pattern search with an extreme barrier.
//!
//! Both solvers follow the classic scheme: poll a pattern of points
//! `x + d` with `max |d| = Δ` around the incumbent, move to a better point
//! and keep `Δ`, or shrink `Δ` by `γ` when the poll fails. A run stops when
//! `Δ` falls below the minimum step or the evaluation budget is spent.
//! Infeasible points are never accepted.
//!
//! The deterministic solver polls the full compass set `±Δ e_j` and moves to
//! the best improving point (ties go to the lowest direction index), so its
//! outcome does not depend on whether the poll runs serially or in parallel.
//! The stochastic solver shuffles a compass set augmented with one random
//! direction pair, accepts the first improvement, and on stalling tries a
//! bounded number of random perturbations of the incumbent before stopping.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Outcome of one black-box call.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Evaluation {
    Finite {
        cost: f64,
    },
    /// Extreme barrier. `inner_skipped` tells whether the expensive inner
    /// solve was bypassed.
    Infeasible {
        inner_skipped: bool,
    },
}

impl Evaluation {
    pub fn cost(&self) -> Option<f64> {
        match *self {
            Evaluation::Finite { cost } => Some(cost),
            Evaluation::Infeasible { .. } => None,
        }
    }

    pub fn ran_inner_solve(&self) -> bool {
        !matches!(
            self,
            Evaluation::Infeasible {
                inner_skipped: true
            }
        )
    }
}

/// Deterministic objective. Must return identical results for identical input.
pub trait BlackBox: Sync {
    fn evaluate(&self, x: &[f64]) -> Evaluation;
}

impl<F> BlackBox for F
where
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        self(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "det")]
    Deterministic,
    #[serde(rename = "stoch")]
    Stochastic,
}

fn default_delta0() -> f64 {
    8.0
}
fn default_gamma() -> f64 {
    0.5
}
fn default_min_step() -> f64 {
    0.1
}
fn default_max_evals() -> usize {
    20_000
}
fn default_restarts() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    /// Per-coordinate step multipliers; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Escape perturbations the stochastic solver may try over a run.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Evaluate deterministic polls concurrently.
    #[serde(default)]
    pub parallel: bool,
}

fn default_solver() -> SolverKind {
    SolverKind::Deterministic
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::Deterministic,
            delta0: default_delta0(),
            gamma: default_gamma(),
            min_step: default_min_step(),
            max_evals: default_max_evals(),
            scales: None,
            seed: 0,
            restarts: default_restarts(),
            parallel: false,
        }
    }
}

impl SearchConfig {
    fn validate(&self, dim: usize) -> Result<(), DfoError> {
        let bad = |m: String| Err(DfoError::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.min_step > 0.0 && self.min_step.is_finite()) {
            return bad(format!("min_step must be positive, got {}", self.min_step));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return bad(format!("delta0 must be positive, got {}", self.delta0));
        }
        if self.max_evals == 0 {
            return bad("max_evals must be positive".into());
        }
        if let Some(s) = &self.scales {
            if s.len() != dim || s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad(format!("need {dim} positive scales"));
            }
        }
        Ok(())
    }

    fn scales_for(&self, dim: usize) -> Vec<f64> {
        self.scales.clone().unwrap_or_else(|| vec![1.0; dim])
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DfoError {
    #[error("starting point is infeasible")]
    InfeasibleStart,
    #[error("invalid search configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MinStep,
    MaxEvals,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    /// Evaluation count when the incumbent was found.
    pub eval: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub best_point: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: usize,
    pub inner_solves: usize,
    pub cache_hits: usize,
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
    /// Step size of the last poll.
    pub last_step: f64,
}

/// Memoizing, counting wrapper around a black box.
struct Evaluator<'a, F: BlackBox + ?Sized> {
    f: &'a F,
    cache: HashMap<Vec<u64>, Evaluation>,
    evaluations: usize,
    inner_solves: usize,
    cache_hits: usize,
    budget: usize,
}

fn key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same point
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl<'a, F: BlackBox + ?Sized> Evaluator<'a, F> {
    fn new(f: &'a F, budget: usize) -> Self {
        Self {
            f,
            cache: HashMap::new(),
            evaluations: 0,
            inner_solves: 0,
            cache_hits: 0,
            budget,
        }
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    fn record(&mut self, k: Vec<u64>, e: Evaluation) {
        self.evaluations += 1;
        if e.ran_inner_solve() {
            self.inner_solves += 1;
        }
        self.cache.insert(k, e);
    }

    /// Single evaluation; `None` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Option<Evaluation> {
        let k = key(x);
        if let Some(e) = self.cache.get(&k) {
            self.cache_hits += 1;
            return Some(*e);
        }
        if self.exhausted() {
            return None;
        }
        let e = self.f.evaluate(x);
        self.record(k, e);
        Some(e)
    }

    /// Evaluates a batch. Cache lookups and budget truncation happen in
    /// candidate order, so the result is independent of `parallel`.
    fn eval_batch(&mut self, xs: &[Vec<f64>], parallel: bool) -> Vec<Option<Evaluation>> {
        let mut out = vec![None; xs.len()];
        let mut misses = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            let k = key(x);
            if let Some(e) = self.cache.get(&k) {
                self.cache_hits += 1;
                out[i] = Some(*e);
            } else if self.evaluations + misses.len() < self.budget {
                misses.push(i);
            }
        }
        let results = self.run_misses(xs, &misses, parallel);
        for (&i, e) in misses.iter().zip(results) {
            self.record(key(&xs[i]), e);
            out[i] = Some(e);
        }
        out
    }

    #[cfg(feature = "parallel")]
    fn run_misses(&self, xs: &[Vec<f64>], misses: &[usize], parallel: bool) -> Vec<Evaluation> {
        use rayon::prelude::*;
        if parallel {
            misses
                .par_iter()
                .map(|&i| self.f.evaluate(&xs[i]))
                .collect()
        } else {
            misses.iter().map(|&i| self.f.evaluate(&xs[i])).collect()
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn run_misses(&self, xs: &[Vec<f64>], misses: &[usize], _parallel: bool) -> Vec<Evaluation> {
        misses.iter().map(|&i| self.f.evaluate(&xs[i])).collect()
    }
}

/// Poll generation mode.
pub enum PollMode<'r> {
    Compass,
    /// Shuffled compass set plus one random direction pair.
    Randomized(&'r mut ChaCha8Rng),
}

/// Candidate points around `x` at step `delta`. Every direction has scaled
/// infinity norm `max_j |d_j| / scale_j` equal to `delta`.
pub fn poll_set(x: &[f64], delta: f64, scales: &[f64], mode: PollMode<'_>) -> Vec<Vec<f64>> {
    let dim = x.len();
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * dim + 2);
    for j in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[j] = sign * delta * scales[j];
            dirs.push(d);
        }
    }
    if let PollMode::Randomized(rng) = mode {
        if dim > 1 {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = v
                .iter()
                .zip(scales)
                .fold(0.0f64, |acc, (vi, s)| acc.max(vi.abs() / s));
            if norm > 0.0 {
                let d: Vec<f64> = v.iter().map(|vi| vi / norm * delta).collect();
                dirs.push(d.iter().map(|v| -v).collect());
                dirs.push(d);
            }
        }
        dirs.shuffle(rng);
    }
    dirs.into_iter()
        .map(|d| x.iter().zip(&d).map(|(a, b)| a + b).collect())
        .collect()
}

fn start<'a, F: BlackBox + ?Sized>(
    f: &'a F,
    x0: &[f64],
    cfg: &SearchConfig,
) -> Result<(Evaluator<'a, F>, f64), DfoError> {
    cfg.validate(x0.len())?;
    let mut ev = Evaluator::new(f, cfg.max_evals);
    match ev.eval(x0) {
        Some(Evaluation::Finite { cost }) => Ok((ev, cost)),
        _ => Err(DfoError::InfeasibleStart),
    }
}

fn finish<F: BlackBox + ?Sized>(
    ev: Evaluator<'_, F>,
    best_point: Vec<f64>,
    best_cost: f64,
    trace: Vec<TraceEntry>,
    termination: Termination,
    last_step: f64,
) -> RunResult {
    RunResult {
        best_point,
        best_cost,
        evaluations: ev.evaluations,
        inner_solves: ev.inner_solves,
        cache_hits: ev.cache_hits,
        trace,
        termination,
        last_step,
    }
}

/// Compass pattern search with complete polling.
pub fn pattern_search_deterministic<F: BlackBox + ?Sized>(
    f: &F,
    x0: &[f64],
    cfg: &SearchConfig,
) -> Result<RunResult, DfoError> {
    let (mut ev, mut fx) = start(f, x0, cfg)?;
    let scales = cfg.scales_for(x0.len());
    let mut x = x0.to_vec();
    let mut trace = vec![TraceEntry { eval: 1, cost: fx }];
    let mut delta = cfg.delta0;
    let mut last_step = delta;
    let termination = loop {
        if delta < cfg.min_step {
            break Termination::MinStep;
        }
        if ev.exhausted() {
            break Termination::MaxEvals;
        }
        last_step = delta;
        let cands = poll_set(&x, delta, &scales, PollMode::Compass);
        let results = ev.eval_batch(&cands, cfg.parallel);
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in results.iter().enumerate() {
            if let Some(c) = r.and_then(|e| e.cost()) {
                if c < fx && best.is_none_or(|(_, bc)| c < bc) {
                    best = Some((i, c));
                }
            }
        }
        match best {
            Some((i, c)) => {
                x = cands[i].clone();
                fx = c;
                trace.push(TraceEntry {
                    eval: ev.evaluations,
                    cost: c,
                });
            }
            None => {
                if results.iter().any(Option::is_none) {
                    break Termination::MaxEvals;
                }
                delta *= cfg.gamma;
            }
        }
    };
    Ok(finish(ev, x, fx, trace, termination, last_step))
}

/// Randomized opportunistic pattern search with a bounded escape heuristic.
pub fn pattern_search_stochastic<F: BlackBox + ?Sized>(
    f: &F,
    x0: &[f64],
    cfg: &SearchConfig,
    seed: u64,
) -> Result<RunResult, DfoError> {
    let (mut ev, mut fx) = start(f, x0, cfg)?;
    let dim = x0.len();
    let scales = cfg.scales_for(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    let mut trace = vec![TraceEntry { eval: 1, cost: fx }];
    let mut delta = cfg.delta0;
    let mut last_step = delta;
    let mut restarts_left = cfg.restarts;
    let escape_radius = 5.0 * cfg.min_step;

    let termination = 'outer: loop {
        if ev.exhausted() {
            break Termination::MaxEvals;
        }
        if delta < cfg.min_step {
            while restarts_left > 0 {
                restarts_left -= 1;
                let y: Vec<f64> = x
                    .iter()
                    .zip(&scales)
                    .map(|(xi, s)| xi + rng.gen_range(-1.0..=1.0) * escape_radius * s)
                    .collect();
                match ev.eval(&y) {
                    None => break 'outer Termination::MaxEvals,
                    Some(e) => {
                        if let Some(c) = e.cost().filter(|&c| c < fx) {
                            x = y;
                            fx = c;
                            trace.push(TraceEntry {
                                eval: ev.evaluations,
                                cost: c,
                            });
                            delta = escape_radius;
                            continue 'outer;
                        }
                    }
                }
            }
            break Termination::MinStep;
        }
        last_step = delta;
        let cands = poll_set(&x, delta, &scales, PollMode::Randomized(&mut rng));
        let mut moved = false;
        for c in cands {
            let Some(e) = ev.eval(&c) else {
                break 'outer Termination::MaxEvals;
            };
            if let Some(cost) = e.cost().filter(|&v| v < fx) {
                x = c;
                fx = cost;
                trace.push(TraceEntry {
                    eval: ev.evaluations,
                    cost,
                });
                moved = true;
                break;
            }
        }
        if !moved {
            delta *= cfg.gamma;
        }
    };
    Ok(finish(ev, x, fx, trace, termination, last_step))
}

/// Runs the solver selected by `cfg.solver`.
pub fn run<F: BlackBox + ?Sized>(
    f: &F,
    x0: &[f64],
    cfg: &SearchConfig,
) -> Result<RunResult, DfoError> {
    match cfg.solver {
        SolverKind::Deterministic => pattern_search_deterministic(f, x0, cfg),
        SolverKind::Stochastic => pattern_search_stochastic(f, x0, cfg, cfg.seed),
    }
}
