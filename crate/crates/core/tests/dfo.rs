mod common;

use proptest::prelude::*;
use rand::Rng;

use roadalign_core::dfo::{
    pattern_search_deterministic, pattern_search_stochastic, poll_set, run, Evaluation, PollMode,
    RunResult, SearchConfig, SolverKind,
};

fn target(d: usize) -> Vec<f64> {
    (0..d).map(|j| 1.37 * j as f64 - 3.21).collect()
}

fn quadratic(x_star: Vec<f64>) -> impl Fn(&[f64]) -> Evaluation + Sync {
    move |x: &[f64]| Evaluation::Finite {
        cost: x.iter().zip(&x_star).map(|(a, b)| (a - b).powi(2)).sum(),
    }
}

fn starts(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = common::rng(seed);
    (0..10)
        .map(|_| (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect())
        .collect()
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn trace_nonincreasing(r: &RunResult) -> bool {
    r.trace
        .windows(2)
        .all(|w| w[1].cost <= w[0].cost && w[1].eval >= w[0].eval)
        && r.trace.last().map(|t| t.cost) == Some(r.best_cost)
}

#[test]
fn both_solvers_reach_the_quadratic_minimum() {
    for d in [2, 6, 12] {
        let x_star = target(d);
        let f = quadratic(x_star.clone());
        for (k, x0) in starts(d, d as u64).into_iter().enumerate() {
            for solver in [SolverKind::Deterministic, SolverKind::Stochastic] {
                let cfg = SearchConfig {
                    solver,
                    seed: k as u64,
                    ..SearchConfig::default()
                };
                let r = run(&f, &x0, &cfg).unwrap();
                let dist = inf_dist(&r.best_point, &x_star);
                assert!(dist <= 0.2, "{solver:?} d={d} start {k}: {dist}");
                assert!(trace_nonincreasing(&r));
            }
        }
    }
}

#[test]
fn deterministic_runs_are_bit_identical() {
    let f = quadratic(target(6));
    let x0 = vec![5.5; 6];
    let serial = SearchConfig::default();
    let concurrent = SearchConfig {
        parallel: true,
        ..SearchConfig::default()
    };
    let a = pattern_search_deterministic(&f, &x0, &serial).unwrap();
    let b = pattern_search_deterministic(&f, &x0, &serial).unwrap();
    let c = pattern_search_deterministic(&f, &x0, &concurrent).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let bits = |r: &RunResult| r.best_point.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&c));
}

#[test]
fn stochastic_runs_repeat_per_seed() {
    let f = quadratic(target(4));
    let x0 = vec![-7.0; 4];
    let cfg = SearchConfig {
        solver: SolverKind::Stochastic,
        ..SearchConfig::default()
    };
    let a = pattern_search_stochastic(&f, &x0, &cfg, 9).unwrap();
    let b = pattern_search_stochastic(&f, &x0, &cfg, 9).unwrap();
    let c = pattern_search_stochastic(&f, &x0, &cfg, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.trace, c.trace);
}

/// Deterministic result is a mesh-local minimum: no compass neighbor at the
/// final step is strictly better.
#[test]
fn final_point_is_mesh_local_optimum() {
    let f = |x: &[f64]| Evaluation::Finite {
        cost: (x[0] - 1.0).abs() + 2.0 * (x[1] + 0.5).powi(2) + (x[0] - x[1]).abs() * 0.3,
    };
    let r = run(&f, &[9.0, -9.0], &SearchConfig::default()).unwrap();
    let scales = [1.0, 1.0];
    for y in poll_set(&r.best_point, r.last_step, &scales, PollMode::Compass) {
        assert!(
            f(&y).cost().unwrap() >= r.best_cost,
            "{y:?} beats {:?}",
            r.best_point
        );
    }
}

#[test]
fn barrier_points_never_become_incumbents() {
    let f = |x: &[f64]| {
        if x[0] + x[1] < 1.0 {
            Evaluation::Infeasible {
                inner_skipped: true,
            }
        } else {
            Evaluation::Finite {
                cost: x[0] * x[0] + x[1] * x[1],
            }
        }
    };
    for solver in [SolverKind::Deterministic, SolverKind::Stochastic] {
        let cfg = SearchConfig {
            solver,
            ..SearchConfig::default()
        };
        let r = run(&f, &[6.0, 4.0], &cfg).unwrap();
        assert!(r.best_point[0] + r.best_point[1] >= 1.0);
        assert!(r.inner_solves < r.evaluations);
        assert!(r.best_cost <= 52.0 && r.best_cost >= 0.5);
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let f = |_: &[f64]| Evaluation::Infeasible {
        inner_skipped: true,
    };
    assert!(run(&f, &[0.0], &SearchConfig::default()).is_err());
}

#[test]
fn evaluation_budget_is_respected() {
    let f = quadratic(target(12));
    let cfg = SearchConfig {
        max_evals: 50,
        ..SearchConfig::default()
    };
    let r = run(&f, &[30.0; 12], &cfg).unwrap();
    assert!(r.evaluations <= 50);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poll_sets_positively_span(d in 1usize..6, seed in any::<u64>(), delta in 0.01f64..10.0) {
        let mut rng = common::rng(seed);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let scales: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..3.0)).collect();
        for mode in [0, 1] {
            let pts = if mode == 0 {
                poll_set(&x, delta, &scales, PollMode::Compass)
            } else {
                poll_set(&x, delta, &scales, PollMode::Randomized(&mut rng))
            };
            let dirs: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| p.iter().zip(&x).map(|(a, b)| a - b).collect())
                .collect();
            prop_assert!(common::positively_spans(&dirs));
            for dir in &dirs {
                let norm = dir.iter().zip(&scales).fold(0.0f64, |m, (v, s)| m.max(v.abs() / s));
                prop_assert!((norm - delta).abs() <= 1e-9 * delta.max(1.0));
            }
        }
    }

    #[test]
    fn traces_never_increase(seed in any::<u64>(), stochastic in any::<bool>()) {
        let mut rng = common::rng(seed);
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..4.0)).collect();
        let f = move |x: &[f64]| Evaluation::Finite {
            cost: x.iter().zip(&a).map(|(v, w)| w * v.abs() + (v * w).sin()).sum(),
        };
        let cfg = SearchConfig {
            solver: if stochastic { SolverKind::Stochastic } else { SolverKind::Deterministic },
            seed,
            max_evals: 400,
            ..SearchConfig::default()
        };
        let r = run(&f, &[3.0, -2.0, 5.0], &cfg).unwrap();
        prop_assert!(trace_nonincreasing(&r));
    }
}
