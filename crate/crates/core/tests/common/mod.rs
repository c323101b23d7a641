//! Independent oracles shared by the integration tests and the acceptance gate.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roadalign_core::geometry::Alignment;
use roadalign_core::valign::{Pit, VAlignConfig, VAlignProblem};
use roadalign_core::Point;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random alignment whose curves always fit their legs: every tangent
/// length stays below half of both adjacent legs.
pub fn random_feasible_alignment(rng: &mut ChaCha8Rng, n_points: usize) -> Alignment {
    let mut points = vec![Point::new(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
    )];
    let mut heading: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let mut legs = Vec::new();
    for k in 1..n_points {
        if k > 1 {
            let deflection = rng.gen_range(0.1..2.6) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            heading += deflection;
        }
        let leg = rng.gen_range(20.0..80.0);
        legs.push(leg);
        let last = *points.last().unwrap();
        points.push(last + Point::new(heading.cos(), heading.sin()) * leg);
    }
    let radii = (1..n_points - 1)
        .map(|i| {
            let u = points[i - 1] - points[i];
            let v = points[i + 1] - points[i];
            let theta = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
            let room = 0.5 * legs[i - 1].min(legs[i]);
            let r_max = room * (theta / 2.0).tan();
            rng.gen_range(0.05..0.95) * r_max
        })
        .collect();
    Alignment::from_parts(points, radii).unwrap()
}

/// Exact minimum transport cost for net section supplies `supply` (positive
/// means excess cut) on a chain with one borrow and one waste pit.
///
/// Arc flows on a path graph are fixed by the pit amounts, so with the
/// borrowed amount `b` the waste amount is `sum + b` and the cost is convex
/// piecewise linear in `b`. Its minimum sits at an interval end or at a
/// point where some arc flow changes sign.
pub fn exact_transport(supply: &[f64], haul: f64, borrow: &Pit, waste: &Pit) -> Option<f64> {
    let total: f64 = supply.iter().sum();
    let lo = 0.0f64.max(-total);
    let hi = borrow.cap.min(waste.cap - total);
    if lo > hi + 1e-9 {
        return None;
    }
    let hi = hi.max(lo);
    let m = supply.len();
    let cost_at = |b: f64| {
        let w = total + b;
        let mut flow = 0.0;
        let mut c = borrow.cost * b + waste.cost * w;
        for i in 0..m - 1 {
            flow += supply[i];
            if borrow.at == i {
                flow += b;
            }
            if waste.at == i {
                flow -= w;
            }
            c += haul * flow.abs();
        }
        c
    };
    let mut candidates = vec![lo, hi];
    let mut base = 0.0;
    for i in 0..m - 1 {
        base += supply[i];
        // flow_i(b) = base + b [borrow <= i] - (total + b) [waste <= i]
        let slope = f64::from(u8::from(borrow.at <= i)) - f64::from(u8::from(waste.at <= i));
        let offset = base - if waste.at <= i { total } else { 0.0 };
        if slope != 0.0 {
            let b = -offset / slope;
            if b > lo && b < hi {
                candidates.push(b);
            }
        }
    }
    candidates
        .into_iter()
        .map(cost_at)
        .min_by(|a, b| a.total_cmp(b))
}

fn tributary(s: &[f64]) -> Vec<f64> {
    let m = s.len();
    (0..m)
        .map(|i| {
            let l = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
            let r = if i + 1 < m { s[i + 1] - s[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

/// Earthwork cost of fixed section offsets `u` (profile minus ground).
pub fn earthwork_cost(s: &[f64], u: &[f64], cfg: &VAlignConfig) -> Option<f64> {
    let trib = tributary(s);
    let supply: Vec<f64> = u
        .iter()
        .zip(&trib)
        .map(|(ui, li)| -cfg.width * li * ui)
        .collect();
    let cut: f64 = supply.iter().map(|v| v.max(0.0)).sum();
    let fill: f64 = supply.iter().map(|v| (-v).max(0.0)).sum();
    let transport = exact_transport(&supply, cfg.haul, &cfg.borrow[0], &cfg.waste[0])?;
    Some(cfg.p * cut + cfg.q * fill + transport)
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when (numerically) singular.
fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Exact inner optimum for one spline segment with one borrow and one waste
/// pit, by vertex enumeration.
///
/// With `z = (c0, c1, c2, b)`, where `P(σ) = c0 + c1 σ + c2 σ²` and `b` is
/// the borrowed volume, every offset, arc flow and the wasted volume are
/// affine in `z`, and the cost `p Σ cut + q Σ fill + pit costs + haul Σ |flow|`
/// is convex piecewise linear. Its minimum over the feasible polyhedron is
/// attained where four independent hyperplanes from {offset = 0, arc flow = 0,
/// grade bound, pit bound} meet, so the oracle solves every 4-subset, keeps
/// the feasible points and returns the cheapest with its offsets.
pub fn brute_force_valign(problem: &VAlignProblem) -> Option<(f64, Vec<f64>)> {
    let s = &problem.chainages;
    let h = &problem.elevations;
    let cfg = &problem.config;
    assert!(!cfg.fix_ends && cfg.borrow.len() == 1 && cfg.waste.len() == 1);
    let (borrow, waste) = (&cfg.borrow[0], &cfg.waste[0]);
    let m = s.len();
    let len = s[m - 1] - s[0];
    let sigma: Vec<f64> = s.iter().map(|x| (x - s[0]) / len).collect();
    let trib = tributary(s);

    // affine forms `coef . z + constant`
    type Affine = ([f64; 4], f64);
    let offset: Vec<Affine> = (0..m)
        .map(|i| ([1.0, sigma[i], sigma[i] * sigma[i], 0.0], -h[i]))
        .collect();
    let scale = |f: Affine, k: f64| -> Affine { (f.0.map(|c| c * k), f.1 * k) };
    let add = |f: Affine, g: Affine| -> Affine {
        (
            [
                f.0[0] + g.0[0],
                f.0[1] + g.0[1],
                f.0[2] + g.0[2],
                f.0[3] + g.0[3],
            ],
            f.1 + g.1,
        )
    };
    let supply: Vec<Affine> = (0..m)
        .map(|i| scale(offset[i], -cfg.width * trib[i]))
        .collect();
    let b_form: Affine = ([0.0, 0.0, 0.0, 1.0], 0.0);
    let total = supply.iter().fold(([0.0; 4], 0.0), |acc, &f| add(acc, f));
    let w_form = add(total, b_form);
    let mut flows = Vec::new();
    let mut acc: Affine = ([0.0; 4], 0.0);
    for i in 0..m - 1 {
        acc = add(acc, supply[i]);
        if borrow.at == i {
            acc = add(acc, b_form);
        }
        if waste.at == i {
            acc = add(acc, scale(w_form, -1.0));
        }
        flows.push(acc);
    }
    let grade0: Affine = ([0.0, 1.0 / len, 0.0, 0.0], 0.0);
    let grade1: Affine = ([0.0, 1.0 / len, 2.0 / len, 0.0], 0.0);

    let mut planes: Vec<([f64; 4], f64)> = Vec::new();
    let mut level = |f: Affine, value: f64| planes.push((f.0, value - f.1));
    for &f in offset.iter().chain(&flows) {
        level(f, 0.0);
    }
    for g in [grade0, grade1] {
        level(g, cfg.g_lo);
        level(g, cfg.g_hi);
    }
    level(b_form, 0.0);
    level(b_form, borrow.cap);
    level(w_form, 0.0);
    level(w_form, waste.cap);

    let at = |f: &Affine, z: &[f64; 4]| f.0.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + f.1;
    let tol = 1e-9;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let n = planes.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let pick = [planes[i], planes[j], planes[k], planes[l]];
                    let Some(z) = solve_dense(pick.map(|p| p.0), pick.map(|p| p.1)) else {
                        continue;
                    };
                    let (g0, g1) = (at(&grade0, &z), at(&grade1, &z));
                    let (b, w) = (z[3], at(&w_form, &z));
                    let inside = |v: f64, lo: f64, hi: f64| v >= lo - tol && v <= hi + tol;
                    if !(inside(g0, cfg.g_lo, cfg.g_hi)
                        && inside(g1, cfg.g_lo, cfg.g_hi)
                        && inside(b, 0.0, borrow.cap)
                        && inside(w, 0.0, waste.cap))
                    {
                        continue;
                    }
                    let sup: Vec<f64> = supply.iter().map(|f| at(f, &z)).collect();
                    let cut: f64 = sup.iter().map(|v| v.max(0.0)).sum();
                    let fill: f64 = sup.iter().map(|v| (-v).max(0.0)).sum();
                    let haul: f64 = flows.iter().map(|f| at(f, &z).abs()).sum();
                    let cost = cfg.p * cut
                        + cfg.q * fill
                        + borrow.cost * b
                        + waste.cost * w
                        + cfg.haul * haul;
                    if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                        best = Some((cost, offset.iter().map(|f| at(f, &z)).collect()));
                    }
                }
            }
        }
    }
    best
}

/// Best cost over profiles whose end grades and last offset lie on a 1 cm
/// lattice, searched coarse to fine. Any feasible profile bounds the true
/// optimum from above.
pub fn lattice_upper_bound(problem: &VAlignProblem) -> Option<f64> {
    const STEP: f64 = 0.01;
    let s = &problem.chainages;
    let h = &problem.elevations;
    let cfg = &problem.config;
    let m = s.len();
    let (s0, s1) = (s[0], s[m - 1]);
    let len = s1 - s0;
    let eval = |q: [f64; 3]| -> Option<f64> {
        let grade = |v: f64| {
            let g = v / len;
            (g >= cfg.g_lo - 1e-12 && g <= cfg.g_hi + 1e-12).then(|| g.clamp(cfg.g_lo, cfg.g_hi))
        };
        let (g0, g1) = (grade(q[0])?, grade(q[1])?);
        let y_last = h[m - 1] + q[2];
        let profile = |x: f64| {
            y_last - g0 * (s1 - x) - (g1 - g0) / (2.0 * len) * (len * len - (x - s0) * (x - s0))
        };
        let u: Vec<f64> = (0..m).map(|i| profile(s[i]) - h[i]).collect();
        if cfg.fix_ends && (u[0].abs() > 1e-9 || u[m - 1].abs() > 1e-9) {
            return None;
        }
        earthwork_cost(s, &u, cfg)
    };
    let radius = 6i64;
    let mut step_units: i64 = 4i64.pow(5);
    let mut center = [0i64; 3];
    let mut best: Option<(f64, [i64; 3])> = None;
    while step_units >= 1 {
        loop {
            let mut stage = best;
            for a in -radius..=radius {
                for b in -radius..=radius {
                    for c in -radius..=radius {
                        let idx = [
                            center[0] + a * step_units,
                            center[1] + b * step_units,
                            center[2] + c * step_units,
                        ];
                        if let Some(cost) = eval(idx.map(|k| k as f64 * STEP)) {
                            if stage.map_or(true, |(bc, _)| cost < bc) {
                                stage = Some((cost, idx));
                            }
                        }
                    }
                }
            }
            let moved = stage.map(|b| b.1) != best.map(|b| b.1);
            best = stage;
            match best {
                Some((_, idx)) if moved => center = idx,
                _ => break,
            }
        }
        step_units /= 4;
    }
    best.map(|(c, _)| c)
}

/// Random inner instance sized for the brute-force oracle.
pub fn small_valign_instance(rng: &mut ChaCha8Rng) -> VAlignProblem {
    let m = if rng.gen_bool(0.25) { 3 } else { 4 };
    let spacing = 10.0;
    let chainages: Vec<f64> = (0..m).map(|i| i as f64 * spacing).collect();
    let elevations: Vec<f64> = (0..m)
        .map(|_| 100.0 + rng.gen_range(-40i32..=40) as f64 * 0.05)
        .collect();
    let cfg = VAlignConfig {
        segments: Some(1),
        g_lo: -(rng.gen_range(1..=6) as f64) * 0.05,
        g_hi: rng.gen_range(1..=6) as f64 * 0.05,
        p: rng.gen_range(1..=4) as f64 * 0.5,
        q: rng.gen_range(1..=4) as f64 * 0.5,
        haul: rng.gen_range(1..=4) as f64 * 0.25,
        width: 8.0,
        borrow: vec![Pit {
            at: rng.gen_range(0..m),
            cost: rng.gen_range(1..=6) as f64,
            cap: 1e5,
        }],
        waste: vec![Pit {
            at: rng.gen_range(0..m),
            cost: rng.gen_range(1..=6) as f64,
            cap: 1e5,
        }],
        ..VAlignConfig::default()
    };
    VAlignProblem::new(chainages, elevations, cfg).unwrap()
}

/// Random inner instance with several spline segments and pits.
pub fn medium_valign_instance(rng: &mut ChaCha8Rng) -> VAlignProblem {
    let m = rng.gen_range(5..=30);
    let mut s = 0.0;
    let chainages: Vec<f64> = (0..m)
        .map(|_| {
            let v = s;
            s += rng.gen_range(5.0..25.0);
            v
        })
        .collect();
    let mut z = 100.0;
    let elevations: Vec<f64> = (0..m)
        .map(|_| {
            z += rng.gen_range(-2.0..2.0);
            z
        })
        .collect();
    let n_borrow = rng.gen_range(0..=2);
    let n_waste = rng.gen_range(0..=2);
    let pit = |rng: &mut ChaCha8Rng| Pit {
        at: rng.gen_range(0..m),
        cost: rng.gen_range(0.5..5.0),
        cap: rng.gen_range(500.0..5000.0),
    };
    let cfg = VAlignConfig {
        segments: Some(rng.gen_range(1..=(m - 1).min(4))),
        g_lo: -rng.gen_range(0.05..0.15),
        g_hi: rng.gen_range(0.05..0.15),
        p: rng.gen_range(0.5..3.0),
        q: rng.gen_range(0.5..3.0),
        haul: rng.gen_range(0.05..0.5),
        width: rng.gen_range(6.0..12.0),
        borrow: (0..n_borrow).map(|_| pit(rng)).collect(),
        waste: (0..n_waste).map(|_| pit(rng)).collect(),
        fix_ends: rng.gen_bool(0.3),
        ..VAlignConfig::default()
    };
    VAlignProblem::new(chainages, elevations, cfg).unwrap()
}

/// True when nonnegative combinations of `dirs` reach every `±e_j`, which
/// is equivalent to positively spanning the space.
pub fn positively_spans(dirs: &[Vec<f64>]) -> bool {
    use roadalign_core::valign::{solve_lp, LinearProgram, LpStatus, RowSense};
    let d = dirs[0].len();
    (0..d).all(|j| {
        [1.0, -1.0].iter().all(|&sign| {
            let mut lp = LinearProgram::new();
            let vars: Vec<usize> = dirs
                .iter()
                .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
                .collect();
            for row in 0..d {
                let coefs: Vec<(usize, f64)> = vars
                    .iter()
                    .zip(dirs)
                    .map(|(&v, dir)| (v, dir[row]))
                    .collect();
                let rhs = if row == j { sign } else { 0.0 };
                lp.add_row(&coefs, RowSense::Eq, rhs);
            }
            matches!(solve_lp(&lp).map(|s| s.status), Ok(LpStatus::Optimal))
        })
    })
}

/// Absolute-or-relative closeness.
pub fn close(a: f64, b: f64, abs: f64, rel: f64) -> bool {
    (a - b).abs() <= abs.max(rel * a.abs().max(b.abs()))
}
