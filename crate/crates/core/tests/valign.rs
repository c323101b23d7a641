mod common;

use proptest::prelude::*;

use roadalign_core::valign::{valign_cost, Pit, VAlignConfig, VAlignProblem, ValignError};

fn tol(a: f64, b: f64) -> bool {
    common::close(a, b, 1e-6, 1e-3)
}

#[test]
fn matches_vertex_enumeration_on_small_instances() {
    for seed in 0..40 {
        let problem = common::small_valign_instance(&mut common::rng(seed));
        let lp = valign_cost(&problem).unwrap();
        let (exact, offsets) = common::brute_force_valign(&problem).unwrap();
        assert!(
            tol(lp.cost, exact),
            "seed {seed}: lp {} oracle {exact}",
            lp.cost
        );
        // the oracle's optimum priced by the independent cost function
        let priced = common::earthwork_cost(&problem.chainages, &offsets, &problem.config).unwrap();
        assert!(tol(priced, exact), "seed {seed}: {priced} vs {exact}");
    }
}

#[test]
fn never_beaten_by_a_centimeter_lattice() {
    for seed in 100..110 {
        let problem = common::small_valign_instance(&mut common::rng(seed));
        let lp = valign_cost(&problem).unwrap();
        let bound = common::lattice_upper_bound(&problem).unwrap();
        assert!(
            lp.cost <= bound + 1e-9,
            "seed {seed}: lp {} lattice {bound}",
            lp.cost
        );
    }
}

#[test]
fn reported_cost_matches_its_own_offsets() {
    for seed in 200..230 {
        let problem = common::small_valign_instance(&mut common::rng(seed));
        let lp = valign_cost(&problem).unwrap();
        let priced =
            common::earthwork_cost(&problem.chainages, &lp.offsets, &problem.config).unwrap();
        assert!(tol(priced, lp.cost), "seed {seed}: {priced} vs {}", lp.cost);
    }
}

fn ground_problem(grade: f64) -> VAlignProblem {
    let s: Vec<f64> = (0..12).map(|i| i as f64 * 15.0).collect();
    let h = s.iter().map(|x| 250.0 + grade * x).collect();
    let cfg = VAlignConfig {
        segments: Some(2),
        borrow: vec![Pit {
            at: 0,
            cost: 3.0,
            cap: 1e4,
        }],
        waste: vec![Pit {
            at: 11,
            cost: 2.0,
            cap: 1e4,
        }],
        ..VAlignConfig::default()
    };
    VAlignProblem::new(s, h, cfg).unwrap()
}

#[test]
fn flat_ground_costs_nothing() {
    assert_eq!(valign_cost(&ground_problem(0.0)).unwrap().cost, 0.0);
}

#[test]
fn tilted_plane_costs_nothing() {
    assert_eq!(valign_cost(&ground_problem(0.04)).unwrap().cost, 0.0);
}

#[test]
fn grade_bounds_force_earthwork() {
    // ground steeper than the allowed grade cannot be followed
    let sol = valign_cost(&ground_problem(0.2)).unwrap();
    assert!(sol.cost > 0.0);
    assert!(sol.grade(50.0) <= 0.1 + 1e-9);
}

#[test]
fn invariants_on_medium_instances() {
    let mut solved = 0;
    for seed in 0..50 {
        let problem = common::medium_valign_instance(&mut common::rng(1000 + seed));
        match valign_cost(&problem) {
            Ok(sol) => {
                let r = sol.residuals(&problem);
                assert!(r.within(1e-6), "seed {seed}: {r:?}");
                solved += 1;
            }
            Err(ValignError::Infeasible) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(solved >= 40, "only {solved} of 50 instances were feasible");
}

#[test]
fn insufficient_pits_are_infeasible() {
    // a deep trench that must be filled without any borrow pit
    let s: Vec<f64> = (0..5).map(|i| i as f64 * 10.0).collect();
    let h = vec![100.0, 100.0, 80.0, 100.0, 100.0];
    let cfg = VAlignConfig {
        segments: Some(1),
        fix_ends: true,
        ..VAlignConfig::default()
    };
    let problem = VAlignProblem::new(s, h, cfg).unwrap();
    assert!(matches!(
        valign_cost(&problem),
        Err(ValignError::Infeasible)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn raising_unit_costs_never_lowers_the_optimum(seed in any::<u64>()) {
        let problem = common::small_valign_instance(&mut common::rng(seed));
        let base = valign_cost(&problem).unwrap().cost;
        let mut dear = problem.clone();
        dear.config.p *= 1.5;
        dear.config.haul *= 2.0;
        let higher = valign_cost(&dear).unwrap().cost;
        prop_assert!(higher >= base - 1e-6 * base.max(1.0));
    }

    #[test]
    fn shifting_the_ground_leaves_cost_unchanged(seed in any::<u64>(), dz in -50.0f64..50.0) {
        let problem = common::small_valign_instance(&mut common::rng(seed));
        let base = valign_cost(&problem).unwrap().cost;
        let mut shifted = problem.clone();
        for h in &mut shifted.elevations {
            *h += dz;
        }
        let moved = valign_cost(&shifted).unwrap().cost;
        prop_assert!(common::close(base, moved, 1e-6, 1e-6));
    }
}
