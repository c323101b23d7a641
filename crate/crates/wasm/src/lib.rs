//! Browser bindings: generate a synthetic corridor, price a hand-edited
//! alignment, and run a short optimization, each returning an SVG plan.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use roadalign_core::bilevel::{evaluate_alignment, optimize};
use roadalign_core::dfo::{SearchConfig, SolverKind};
use roadalign_core::geometry::Alignment;
use roadalign_core::render::{render_svg, Layer, RenderSpec, Stroke};
use roadalign_core::synth::{synth_corridor, SynthSpec};
use roadalign_core::{load_corridor, Corridor};

/// Evaluation budget cap so a click never blocks the page for long.
pub const MAX_DEMO_EVALS: usize = 3000;

#[derive(Serialize)]
pub struct SynthOutput {
    pub corridor: Corridor,
    pub baseline: Alignment,
    pub svg: String,
}

#[derive(Serialize)]
pub struct EvaluateOutput {
    pub feasible: bool,
    pub cost: Option<f64>,
    pub t: Vec<Option<f64>>,
    pub message: String,
    pub svg: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeRequest {
    pub stochastic: bool,
    pub seed: u64,
    pub max_evals: Option<usize>,
}

#[derive(Serialize)]
pub struct OptimizeOutput {
    pub initial_cost: f64,
    pub optimized_cost: f64,
    pub improvement_pct: f64,
    pub evaluations: usize,
    pub inner_solves: usize,
    pub best: Alignment,
    pub svg: String,
}

fn layer(label: &str, alignment: Alignment, stroke: Stroke) -> Layer {
    Layer {
        label: label.into(),
        alignment,
        stroke,
    }
}

fn draw(corridor: &Corridor, layers: &[Layer]) -> Result<String, String> {
    let spec = RenderSpec {
        width: 720.0,
        height: 360.0,
        ..RenderSpec::default()
    };
    render_svg(corridor, layers, &spec).map_err(|e| e.to_string())
}

pub fn synth_impl(spec_json: &str) -> Result<SynthOutput, String> {
    let spec: SynthSpec = serde_json::from_str(spec_json).map_err(|e| e.to_string())?;
    let corridor = synth_corridor(&spec).map_err(|e| e.to_string())?;
    let baseline = corridor.baseline();
    let svg = draw(
        &corridor,
        &[layer("initial", baseline.clone(), Stroke::Solid)],
    )?;
    Ok(SynthOutput {
        corridor,
        baseline,
        svg,
    })
}

pub fn evaluate_impl(corridor_json: &str, alignment_json: &str) -> Result<EvaluateOutput, String> {
    let corridor = load_corridor(corridor_json).map_err(|e| e.to_string())?;
    let alignment: Alignment = serde_json::from_str(alignment_json).map_err(|e| e.to_string())?;
    if alignment.len() != corridor.n_points() {
        return Err(format!(
            "alignment has {} points, corridor expects {}",
            alignment.len(),
            corridor.n_points()
        ));
    }
    let eval = evaluate_alignment(&corridor, &alignment);
    let message = match (&eval.cost, &eval.feasibility.path_error, &eval.inner_error) {
        (Some(c), _, _) => format!("cost {c:.3}"),
        (None, Some(e), _) => format!("infeasible: {e}"),
        (None, None, Some(e)) => format!("no vertical profile: {e}"),
        (None, None, None) => "infeasible: outside the corridor or its boxes".into(),
    };
    let mut layers = vec![layer("initial", corridor.baseline(), Stroke::Solid)];
    if eval.feasibility.path_error.is_none() {
        layers.push(layer("candidate", alignment, Stroke::Dashed));
    }
    Ok(EvaluateOutput {
        feasible: eval.feasibility.feasible,
        cost: eval.cost,
        t: eval.feasibility.containment.iter().map(|s| s.t).collect(),
        message,
        svg: draw(&corridor, &layers)?,
    })
}

pub fn optimize_impl(corridor_json: &str, request_json: &str) -> Result<OptimizeOutput, String> {
    let corridor = load_corridor(corridor_json).map_err(|e| e.to_string())?;
    let req: OptimizeRequest = if request_json.trim().is_empty() {
        OptimizeRequest::default()
    } else {
        serde_json::from_str(request_json).map_err(|e| e.to_string())?
    };
    let cfg = SearchConfig {
        solver: if req.stochastic {
            SolverKind::Stochastic
        } else {
            SolverKind::Deterministic
        },
        seed: req.seed,
        max_evals: req
            .max_evals
            .unwrap_or(MAX_DEMO_EVALS)
            .clamp(1, MAX_DEMO_EVALS),
        ..SearchConfig::default()
    };
    let report = optimize(&corridor, &cfg).map_err(|e| e.to_string())?;
    let svg = draw(
        &corridor,
        &[
            layer("initial", report.initial_alignment.clone(), Stroke::Solid),
            layer("optimized", report.best_alignment.clone(), Stroke::Dashed),
        ],
    )?;
    Ok(OptimizeOutput {
        initial_cost: report.initial_cost,
        optimized_cost: report.optimized_cost,
        improvement_pct: report.improvement_pct,
        evaluations: report.evaluations,
        inner_solves: report.inner_solves,
        best: report.best_alignment,
        svg,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// `spec` is a JSON synthetic-corridor spec; missing fields take defaults.
#[wasm_bindgen]
pub fn synth(spec: &str) -> Result<String, JsError> {
    to_js(synth_impl(spec))
}

#[wasm_bindgen]
pub fn evaluate(corridor: &str, alignment: &str) -> Result<String, JsError> {
    to_js(evaluate_impl(corridor, alignment))
}

/// `request` is `{"stochastic": bool, "seed": u64, "max_evals": n}`, all optional.
#[wasm_bindgen(js_name = optimize)]
pub fn optimize_js(corridor: &str, request: &str) -> Result<String, JsError> {
    to_js(optimize_impl(corridor, request))
}
