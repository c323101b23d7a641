//! Inner problem: vertical alignment with earthwork allocation.
//!
//! For a fixed horizontal alignment every station contributes one section
//! with chainage `s_i` and ground elevation `h_i`. The road profile is a
//! `C^1` piecewise-quadratic spline `P(s)`. Section `i` has offset
//! `u_i = P(s_i) - h_i` and a signed earth volume `w * l_i * (h_i - P(s_i))`
//! split into cut `V+` and fill `V-`. Material moves between neighboring
//! sections at `haul` per unit volume per section step, and to/from borrow
//! and waste pits at the pit's access cost. The model is the continuous,
//! single-period relaxation (no block or side-slope binaries) and is solved
//! exactly as a linear program.
//!
//! Each spline segment is stored in a normalized local variable
//! `σ = (s - s_start) / (s_end - s_start)`, so `P_g(σ) = a1 + a2 σ + a3 σ²`
//! and `P'_g(s) = (a2 + 2 a3 σ) / (s_end - s_start)`.

pub mod lp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus, RowSense};

/// Stations per spline segment when neither `segments` nor `knots` is given.
pub const DEFAULT_STATIONS_PER_SEGMENT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValignError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("inconsistent knot layout: {0}")]
    Knots(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("vertical alignment problem is infeasible")]
    Infeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pit {
    /// Section index the pit is accessed from.
    pub at: usize,
    /// Access haul cost per unit volume.
    pub cost: f64,
    /// Capacity in cubic meters.
    pub cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VAlignConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    /// Section indices of the segment boundaries, first 0 and last `n - 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<usize>>,
    pub g_lo: f64,
    pub g_hi: f64,
    /// Cut cost per cubic meter.
    pub p: f64,
    /// Fill cost per cubic meter.
    pub q: f64,
    /// Haul cost per cubic meter per section step.
    pub haul: f64,
    /// Road width in meters.
    pub width: f64,
    #[serde(default)]
    pub borrow: Vec<Pit>,
    #[serde(default)]
    pub waste: Vec<Pit>,
    #[serde(default)]
    pub fix_ends: bool,
}

impl Default for VAlignConfig {
    fn default() -> Self {
        Self {
            segments: None,
            knots: None,
            g_lo: -0.1,
            g_hi: 0.1,
            p: 1.0,
            q: 1.0,
            haul: 0.1,
            width: 8.0,
            borrow: Vec::new(),
            waste: Vec::new(),
            fix_ends: false,
        }
    }
}

impl VAlignConfig {
    pub fn validate(&self, n_sections: usize) -> Result<(), ValignError> {
        let bad = |m: String| Err(ValignError::Config(m));
        let nonneg = [
            ("p", self.p),
            ("q", self.q),
            ("haul", self.haul),
            ("width", self.width),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("`{name}` must be finite and >= 0, got {v}"));
            }
        }
        if self.p + self.q <= 0.0 {
            return bad("`p + q` must be positive".into());
        }
        if !(self.g_lo.is_finite() && self.g_hi.is_finite() && self.g_lo < self.g_hi) {
            return bad(format!(
                "need g_lo < g_hi, got [{}, {}]",
                self.g_lo, self.g_hi
            ));
        }
        for (kind, pits) in [("borrow", &self.borrow), ("waste", &self.waste)] {
            for (k, pit) in pits.iter().enumerate() {
                if pit.at >= n_sections {
                    return bad(format!("{kind}[{k}] at section {} of {n_sections}", pit.at));
                }
                if !(pit.cost.is_finite()
                    && pit.cost >= 0.0
                    && pit.cap.is_finite()
                    && pit.cap >= 0.0)
                {
                    return bad(format!("{kind}[{k}] needs finite cost >= 0 and cap >= 0"));
                }
            }
        }
        self.knot_layout(n_sections).map(|_| ())
    }

    /// Segment boundaries as section indices.
    pub fn knot_layout(&self, n_sections: usize) -> Result<Vec<usize>, ValignError> {
        if n_sections < 2 {
            return Err(ValignError::Knots("at least two sections required".into()));
        }
        let last = n_sections - 1;
        match (&self.knots, self.segments) {
            (Some(_), Some(_)) => Err(ValignError::Knots(
                "give either `segments` or `knots`, not both".into(),
            )),
            (Some(k), None) => {
                if k.len() < 2 || k[0] != 0 || k[k.len() - 1] != last {
                    return Err(ValignError::Knots(format!(
                        "knots must start at 0 and end at {last}"
                    )));
                }
                if k.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ValignError::Knots(
                        "knots must be strictly increasing".into(),
                    ));
                }
                Ok(k.clone())
            }
            (None, segments) => {
                let g = segments.unwrap_or_else(|| {
                    ((n_sections as f64 / DEFAULT_STATIONS_PER_SEGMENT as f64).round() as usize)
                        .clamp(1, last)
                });
                if g == 0 || g > last {
                    return Err(ValignError::Knots(format!(
                        "{g} segments do not fit {n_sections} sections"
                    )));
                }
                Ok((0..=g)
                    .map(|j| ((j * last) as f64 / g as f64).round() as usize)
                    .collect())
            }
        }
    }
}

/// One inner-problem instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VAlignProblem {
    pub chainages: Vec<f64>,
    pub elevations: Vec<f64>,
    pub config: VAlignConfig,
}

impl VAlignProblem {
    pub fn new(
        chainages: Vec<f64>,
        elevations: Vec<f64>,
        config: VAlignConfig,
    ) -> Result<Self, ValignError> {
        if chainages.len() != elevations.len() {
            return Err(ValignError::Problem(
                "chainage/elevation length mismatch".into(),
            ));
        }
        if chainages.len() < 2 {
            return Err(ValignError::Problem(
                "at least two sections required".into(),
            ));
        }
        if chainages.iter().chain(&elevations).any(|v| !v.is_finite()) {
            return Err(ValignError::Problem("non-finite input".into()));
        }
        if chainages.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ValignError::Problem(
                "chainages must be strictly increasing".into(),
            ));
        }
        config.validate(chainages.len())?;
        Ok(Self {
            chainages,
            elevations,
            config,
        })
    }

    pub fn n_sections(&self) -> usize {
        self.chainages.len()
    }

    /// Trapezoidal tributary length of each section.
    pub fn tributary_lengths(&self) -> Vec<f64> {
        let s = &self.chainages;
        let m = s.len();
        (0..m)
            .map(|i| {
                let left = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
                let right = if i + 1 < m { s[i + 1] - s[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// Column indices of every variable family in the assembled program.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableLayout {
    pub n_sections: usize,
    pub n_segments: usize,
    pub coefs: usize,
    pub offsets: usize,
    pub cut: usize,
    pub fill: usize,
    /// Flow from section `k` to `k + 1`.
    pub right: usize,
    /// Flow from section `k + 1` to `k`.
    pub left: usize,
    pub borrow_flow: usize,
    pub borrow_vol: usize,
    pub waste_flow: usize,
    pub waste_vol: usize,
    pub n_vars: usize,
    /// Elevation subtracted from the ground before assembly; the constant
    /// spline coefficients are relative to it.
    pub datum: f64,
}

impl VariableLayout {
    pub fn new(n_sections: usize, n_segments: usize, n_borrow: usize, n_waste: usize) -> Self {
        let m = n_sections;
        let coefs = 0;
        let offsets = coefs + 3 * n_segments;
        let cut = offsets + m;
        let fill = cut + m;
        let right = fill + m;
        let left = right + (m - 1);
        let borrow_flow = left + (m - 1);
        let borrow_vol = borrow_flow + n_borrow;
        let waste_flow = borrow_vol + n_borrow;
        let waste_vol = waste_flow + n_waste;
        Self {
            n_sections,
            n_segments,
            coefs,
            offsets,
            cut,
            fill,
            right,
            left,
            borrow_flow,
            borrow_vol,
            waste_flow,
            waste_vol,
            n_vars: waste_vol + n_waste,
            datum: 0.0,
        }
    }

    fn coef(&self, g: usize, k: usize) -> usize {
        self.coefs + 3 * g + k
    }
}

fn segment_of(knots: &[usize], i: usize) -> usize {
    // first segment whose end knot is >= i
    knots[1..].partition_point(|&k| k < i)
}

/// Builds the linear program for `problem`.
pub fn assemble(problem: &VAlignProblem) -> Result<(LinearProgram, VariableLayout), ValignError> {
    const INF: f64 = f64::INFINITY;
    let cfg = &problem.config;
    let m = problem.n_sections();
    let knots = cfg.knot_layout(m)?;
    let n_seg = knots.len() - 1;
    let mut layout = VariableLayout::new(m, n_seg, cfg.borrow.len(), cfg.waste.len());
    layout.datum = problem.elevations.iter().sum::<f64>() / m as f64;
    let s = &problem.chainages;
    let h = &problem.elevations;
    let trib = problem.tributary_lengths();

    let mut lp = LinearProgram::new();
    for _ in 0..3 * n_seg + m {
        lp.add_var(0.0, -INF, INF);
    }
    for _ in 0..m {
        lp.add_var(cfg.p, 0.0, INF);
    }
    for _ in 0..m {
        lp.add_var(cfg.q, 0.0, INF);
    }
    for _ in 0..2 * (m - 1) {
        lp.add_var(cfg.haul, 0.0, INF);
    }
    for pit in &cfg.borrow {
        lp.add_var(pit.cost, 0.0, pit.cap);
    }
    for pit in &cfg.borrow {
        lp.add_var(0.0, 0.0, pit.cap);
    }
    for pit in &cfg.waste {
        lp.add_var(pit.cost, 0.0, pit.cap);
    }
    for pit in &cfg.waste {
        lp.add_var(0.0, 0.0, pit.cap);
    }
    debug_assert_eq!(lp.n_vars(), layout.n_vars);

    let seg_len: Vec<f64> = knots.windows(2).map(|w| s[w[1]] - s[w[0]]).collect();

    // offset definition P(s_i) - u_i = h_i
    for i in 0..m {
        let g = segment_of(&knots, i);
        let sigma = (s[i] - s[knots[g]]) / seg_len[g];
        lp.add_row(
            &[
                (layout.coef(g, 0), 1.0),
                (layout.coef(g, 1), sigma),
                (layout.coef(g, 2), sigma * sigma),
                (layout.offsets + i, -1.0),
            ],
            RowSense::Eq,
            h[i] - layout.datum,
        );
    }

    // C^1 continuity at interior knots
    for g in 1..n_seg {
        let (a, b) = (g - 1, g);
        lp.add_row(
            &[
                (layout.coef(a, 0), 1.0),
                (layout.coef(a, 1), 1.0),
                (layout.coef(a, 2), 1.0),
                (layout.coef(b, 0), -1.0),
            ],
            RowSense::Eq,
            0.0,
        );
        lp.add_row(
            &[
                (layout.coef(a, 1), 1.0 / seg_len[a]),
                (layout.coef(a, 2), 2.0 / seg_len[a]),
                (layout.coef(b, 1), -1.0 / seg_len[b]),
            ],
            RowSense::Eq,
            0.0,
        );
    }

    // grade at both ends of every segment, scaled by the segment length
    for g in 0..n_seg {
        let l = seg_len[g];
        let start = [(layout.coef(g, 1), 1.0)];
        let end = [(layout.coef(g, 1), 1.0), (layout.coef(g, 2), 2.0)];
        for row in [&start[..], &end[..]] {
            lp.add_row(row, RowSense::Ge, cfg.g_lo * l);
            lp.add_row(row, RowSense::Le, cfg.g_hi * l);
        }
    }

    // signed volume V+ - V- = -w l_i u_i
    for i in 0..m {
        lp.add_row(
            &[
                (layout.cut + i, 1.0),
                (layout.fill + i, -1.0),
                (layout.offsets + i, cfg.width * trib[i]),
            ],
            RowSense::Eq,
            0.0,
        );
    }

    // conservation of material at each section: supply = demand
    for i in 0..m {
        let mut row = vec![(layout.cut + i, 1.0), (layout.fill + i, -1.0)];
        if i > 0 {
            row.push((layout.right + i - 1, 1.0));
            row.push((layout.left + i - 1, -1.0));
        }
        if i + 1 < m {
            row.push((layout.right + i, -1.0));
            row.push((layout.left + i, 1.0));
        }
        for (j, pit) in cfg.borrow.iter().enumerate() {
            if pit.at == i {
                row.push((layout.borrow_flow + j, 1.0));
            }
        }
        for (j, pit) in cfg.waste.iter().enumerate() {
            if pit.at == i {
                row.push((layout.waste_flow + j, -1.0));
            }
        }
        lp.add_row(&row, RowSense::Eq, 0.0);
    }

    // pit volume balance
    for j in 0..cfg.borrow.len() {
        lp.add_row(
            &[(layout.borrow_flow + j, 1.0), (layout.borrow_vol + j, -1.0)],
            RowSense::Eq,
            0.0,
        );
    }
    for j in 0..cfg.waste.len() {
        lp.add_row(
            &[(layout.waste_flow + j, 1.0), (layout.waste_vol + j, -1.0)],
            RowSense::Eq,
            0.0,
        );
    }

    if cfg.fix_ends {
        lp.add_row(&[(layout.offsets, 1.0)], RowSense::Eq, 0.0);
        lp.add_row(&[(layout.offsets + m - 1, 1.0)], RowSense::Eq, 0.0);
    }

    Ok((lp, layout))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplineSegment {
    pub s_start: f64,
    pub s_end: f64,
    /// `[a1, a2, a3]` in the normalized local variable.
    pub coeffs: [f64; 3],
}

impl SplineSegment {
    fn sigma(&self, s: f64) -> f64 {
        (s - self.s_start) / (self.s_end - self.s_start)
    }

    pub fn value(&self, s: f64) -> f64 {
        let x = self.sigma(s);
        let [a1, a2, a3] = self.coeffs;
        a1 + x * (a2 + x * a3)
    }

    pub fn slope(&self, s: f64) -> f64 {
        let x = self.sigma(s);
        let [_, a2, a3] = self.coeffs;
        (a2 + 2.0 * a3 * x) / (self.s_end - self.s_start)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VAlignSolution {
    pub spline: Vec<SplineSegment>,
    pub offsets: Vec<f64>,
    pub cut: Vec<f64>,
    pub fill: Vec<f64>,
    pub right_flows: Vec<f64>,
    pub left_flows: Vec<f64>,
    pub borrow_flows: Vec<f64>,
    pub borrow_volumes: Vec<f64>,
    pub waste_flows: Vec<f64>,
    pub waste_volumes: Vec<f64>,
    pub cost: f64,
}

/// Worst residual of each structural invariant of a solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    pub offset: f64,
    pub smoothness: f64,
    /// Most negative grade slack (negative means violated).
    pub grade_slack: f64,
    pub volume: f64,
    pub conservation: f64,
    pub pit_balance: f64,
    pub mass_balance: f64,
    /// Most negative cut/fill/flow value.
    pub min_nonneg: f64,
}

impl VAlignSolution {
    /// Profile elevation at chainage `s`.
    pub fn profile(&self, s: f64) -> f64 {
        self.segment_at(s).value(s)
    }

    pub fn grade(&self, s: f64) -> f64 {
        self.segment_at(s).slope(s)
    }

    fn segment_at(&self, s: f64) -> &SplineSegment {
        let k = self.spline.partition_point(|seg| seg.s_end < s);
        &self.spline[k.min(self.spline.len() - 1)]
    }

    pub fn total_cut(&self) -> f64 {
        self.cut.iter().sum()
    }

    pub fn total_fill(&self) -> f64 {
        self.fill.iter().sum()
    }

    /// Recomputes every invariant from scratch against `problem`.
    pub fn residuals(&self, problem: &VAlignProblem) -> Residuals {
        let cfg = &problem.config;
        let m = problem.n_sections();
        let trib = problem.tributary_lengths();
        let mut r = Residuals {
            offset: 0.0,
            smoothness: 0.0,
            grade_slack: f64::INFINITY,
            volume: 0.0,
            conservation: 0.0,
            pit_balance: 0.0,
            mass_balance: 0.0,
            min_nonneg: 0.0,
        };
        for i in 0..m {
            let s = problem.chainages[i];
            let u = self.profile(s) - problem.elevations[i];
            r.offset = r.offset.max((u - self.offsets[i]).abs());
            let signed = cfg.width * trib[i] * (problem.elevations[i] - self.profile(s));
            r.volume = r.volume.max((self.cut[i] - self.fill[i] - signed).abs());
        }
        for w in self.spline.windows(2) {
            let k = w[0].s_end;
            r.smoothness = r
                .smoothness
                .max((w[0].value(k) - w[1].value(k)).abs())
                .max((w[0].slope(k) - w[1].slope(k)).abs());
        }
        for seg in &self.spline {
            for s in [seg.s_start, seg.s_end] {
                let g = seg.slope(s);
                r.grade_slack = r.grade_slack.min(g - cfg.g_lo).min(cfg.g_hi - g);
            }
        }
        for i in 0..m {
            let mut bal = self.cut[i] - self.fill[i];
            if i > 0 {
                bal += self.right_flows[i - 1] - self.left_flows[i - 1];
            }
            if i + 1 < m {
                bal += self.left_flows[i] - self.right_flows[i];
            }
            for (j, pit) in cfg.borrow.iter().enumerate() {
                if pit.at == i {
                    bal += self.borrow_flows[j];
                }
            }
            for (j, pit) in cfg.waste.iter().enumerate() {
                if pit.at == i {
                    bal -= self.waste_flows[j];
                }
            }
            r.conservation = r.conservation.max(bal.abs());
        }
        for (f, v) in self
            .borrow_flows
            .iter()
            .zip(&self.borrow_volumes)
            .chain(self.waste_flows.iter().zip(&self.waste_volumes))
        {
            r.pit_balance = r.pit_balance.max((f - v).abs());
        }
        for (pit, v) in cfg.borrow.iter().zip(&self.borrow_volumes) {
            r.pit_balance = r.pit_balance.max(v - pit.cap);
        }
        for (pit, v) in cfg.waste.iter().zip(&self.waste_volumes) {
            r.pit_balance = r.pit_balance.max(v - pit.cap);
        }
        let supply = self.total_cut() + self.borrow_flows.iter().sum::<f64>();
        let demand = self.total_fill() + self.waste_flows.iter().sum::<f64>();
        r.mass_balance = (supply - demand).abs();
        r.min_nonneg = self
            .cut
            .iter()
            .chain(&self.fill)
            .chain(&self.right_flows)
            .chain(&self.left_flows)
            .chain(&self.borrow_flows)
            .chain(&self.waste_flows)
            .fold(0.0f64, |acc, v| acc.min(*v));
        r
    }
}

impl Residuals {
    /// True when every residual is within `tol` and the grade slack is
    /// no worse than `-1e-9`.
    pub fn within(&self, tol: f64) -> bool {
        self.offset <= tol
            && self.smoothness <= tol
            && self.grade_slack >= -1e-9
            && self.volume <= tol
            && self.conservation <= tol
            && self.pit_balance <= tol
            && self.mass_balance <= tol
            && self.min_nonneg >= -tol
    }
}

/// Optimal inner cost and the solution attaining it.
pub fn valign_cost(problem: &VAlignProblem) -> Result<VAlignSolution, ValignError> {
    let (lp, layout) = assemble(problem)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(ValignError::Infeasible),
        LpStatus::Unbounded => {
            return Err(LpError::Numerical("inner problem reported unbounded".into()).into())
        }
    }
    let knots = problem.config.knot_layout(problem.n_sections())?;
    let x = &sol.x;
    let slice = |start: usize, len: usize| x[start..start + len].to_vec();
    let m = problem.n_sections();
    let nb = problem.config.borrow.len();
    let nw = problem.config.waste.len();
    let spline = knots
        .windows(2)
        .enumerate()
        .map(|(g, w)| SplineSegment {
            s_start: problem.chainages[w[0]],
            s_end: problem.chainages[w[1]],
            coeffs: [
                x[layout.coef(g, 0)] + layout.datum,
                x[layout.coef(g, 1)],
                x[layout.coef(g, 2)],
            ],
        })
        .collect();
    Ok(VAlignSolution {
        spline,
        offsets: slice(layout.offsets, m),
        cut: slice(layout.cut, m),
        fill: slice(layout.fill, m),
        right_flows: slice(layout.right, m - 1),
        left_flows: slice(layout.left, m - 1),
        borrow_flows: slice(layout.borrow_flow, nb),
        borrow_volumes: slice(layout.borrow_vol, nb),
        waste_flows: slice(layout.waste_flow, nw),
        waste_volumes: slice(layout.waste_vol, nw),
        cost: sol.objective,
    })
}
