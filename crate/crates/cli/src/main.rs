use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use roadalign_core::bench::{run_bench, DEFAULT_TOLERANCES};
use roadalign_core::bilevel::{evaluate_alignment, optimize, report_table, BilevelError};
use roadalign_core::dfo::{SearchConfig, SolverKind};
use roadalign_core::feasibility::FeasibilityReport;
use roadalign_core::geometry::Alignment;
use roadalign_core::render::{render_svg, Layer, RenderSpec, Stroke};
use roadalign_core::synth::{synth_corridor, SynthSpec, TerrainFamily};
use roadalign_core::{load_corridor, Corridor};

#[derive(Parser, Debug)]
#[command(
    name = "roadalign",
    version,
    about = "Horizontal road alignment optimizer"
)]
struct Cli {
    /// Search configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the command's main artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the configuration or synthetic corridor.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only errors on stderr, no tables on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a corridor file and the feasibility of its baseline alignment.
    Validate { corridor: PathBuf },
    /// Price one alignment inside a corridor.
    Evaluate {
        corridor: PathBuf,
        alignment: PathBuf,
    },
    /// Optimize the corridor's baseline alignment.
    Optimize {
        corridor: PathBuf,
        #[arg(long, value_parser = parse_solver)]
        solver: Option<SolverKind>,
        #[arg(long)]
        max_evals: Option<usize>,
        /// Evaluate polls on all cores.
        #[arg(long)]
        parallel: bool,
        /// Also render baseline and optimized alignments to this SVG file.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Draw a corridor and alignments as SVG.
    Render {
        corridor: PathBuf,
        /// Alignment files or optimization reports.
        alignments: Vec<PathBuf>,
        #[arg(long)]
        no_baseline: bool,
        #[command(flatten)]
        view: ViewArgs,
    },
    /// Write a synthetic corridor file.
    Synth(SynthArgs),
    /// Deterministic versus seeded stochastic runs over a set of corridors.
    Bench { manifest: PathBuf },
}

#[derive(Args, Debug)]
struct ViewArgs {
    #[arg(long, default_value_t = 900.0)]
    width: f64,
    #[arg(long, default_value_t = 500.0)]
    height: f64,
    /// Contour interval in meters.
    #[arg(long, default_value_t = 0.5)]
    contours: f64,
    #[arg(long)]
    no_contours: bool,
    #[arg(long)]
    no_boundary: bool,
}

impl ViewArgs {
    fn spec(&self) -> anyhow::Result<RenderSpec> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(anyhow!("canvas size must be positive"));
        }
        if !self.no_contours && (self.contours.is_nan() || self.contours <= 0.0) {
            return Err(anyhow!("contour interval must be positive"));
        }
        Ok(RenderSpec {
            width: self.width,
            height: self.height,
            contour_interval: (!self.no_contours).then_some(self.contours),
            boundary: !self.no_boundary,
            ..RenderSpec::default()
        })
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "valley")]
    family: TerrainFamily,
    #[arg(long, default_value_t = 20)]
    stations: usize,
    #[arg(long, default_value_t = 10.0)]
    spacing: f64,
    #[arg(long, default_value_t = 10.0)]
    half_width: f64,
    #[arg(long, default_value_t = 0.5)]
    t_star: f64,
    #[arg(long, default_value_t = 4.0)]
    depth: f64,
    #[arg(long, default_value_t = 0.03)]
    grade: f64,
    /// Interior intersection points.
    #[arg(long, default_value_t = 3)]
    points: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "det" | "deterministic" => Ok(SolverKind::Deterministic),
        "stoch" | "stochastic" => Ok(SolverKind::Stochastic),
        other => Err(format!("unknown solver `{other}` (expected det or stoch)")),
    }
}

/// Command failure with its exit code.
enum Failure {
    /// Infeasible alignment or failed validation.
    Rejected(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
}

impl Ctx {
    fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }

    /// Writes the main artifact to `--out`, or to stdout.
    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => write_file(p, text),
            None => {
                print!("{text}");
                if !text.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    fn search_config(&self) -> anyhow::Result<SearchConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?)
                .with_context(|| format!("invalid search configuration in {}", p.display()))?,
            None => SearchConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn corridor(path: &Path) -> anyhow::Result<Corridor> {
    load_corridor(&read(path)?).with_context(|| format!("invalid corridor {}", path.display()))
}

/// An alignment file, or the best alignment of an optimization report.
fn alignment(path: &Path) -> anyhow::Result<Alignment> {
    let text = read(path)?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("invalid JSON in {}", path.display()))?;
    if let Some(best) = value.get_mut("best_alignment") {
        value = best.take();
    }
    serde_json::from_value(value)
        .with_context(|| format!("invalid alignment in {}", path.display()))
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "alignment".into())
}

/// Names of the violated constraint groups.
fn violations(f: &FeasibilityReport) -> Vec<&'static str> {
    let mut out = Vec::new();
    if f.continuity_margins.iter().any(|m| *m < 0.0) {
        out.push("continuity");
    }
    if f.radius_margins.iter().any(|m| *m < 0.0) {
        out.push("radius");
    }
    if f.box_violations.iter().any(|v| v[0] > 0.0 || v[1] > 0.0) {
        out.push("box");
    }
    if f.path_error.is_some() {
        out.push("path");
    }
    if f.containment.iter().any(|s| !s.inside) {
        out.push("containment");
    }
    out
}

fn validate(ctx: &Ctx, path: &Path) -> CmdResult {
    let c = corridor(path)?;
    let warnings = c.validate().map_err(anyhow::Error::from)?;
    for w in &warnings {
        ctx.say(&format!("warning: {w}"));
    }
    let eval = evaluate_alignment(&c, &c.baseline());
    ctx.say(&format!(
        "{} stations, {} interior points",
        c.n_stations(),
        c.boxes.len()
    ));
    ctx.emit(&eval.feasibility.to_table())?;
    if eval.feasibility.feasible {
        ctx.say("baseline feasible");
        Ok(())
    } else {
        Err(Failure::Rejected(format!(
            "baseline infeasible ({})",
            violations(&eval.feasibility).join(", ")
        )))
    }
}

fn evaluate(ctx: &Ctx, corridor_path: &Path, alignment_path: &Path) -> CmdResult {
    let c = corridor(corridor_path)?;
    let a = alignment(alignment_path)?;
    if a.len() != c.n_points() {
        return Err(Failure::Input(anyhow!(
            "alignment has {} points, corridor expects {}",
            a.len(),
            c.n_points()
        )));
    }
    let eval = evaluate_alignment(&c, &a);
    if let Some(out) = &ctx.out {
        write_file(
            out,
            &serde_json::to_string_pretty(&eval).map_err(anyhow::Error::from)?,
        )?;
    }
    match (&eval.cost, &eval.solution) {
        (Some(cost), Some(sol)) => {
            let sum = |v: &[f64]| v.iter().sum::<f64>();
            println!("cost {cost}");
            ctx.say(&format!(
                "cut {:.3} m3, fill {:.3} m3, borrow {:.3} m3, waste {:.3} m3, {} spline segments",
                sum(&sol.cut),
                sum(&sol.fill),
                sum(&sol.borrow_volumes),
                sum(&sol.waste_volumes),
                sol.spline.len()
            ));
            Ok(())
        }
        _ if !eval.feasibility.feasible => {
            let why = violations(&eval.feasibility).join(", ");
            println!("infeasible ({why})");
            if !ctx.quiet {
                print!("{}", eval.feasibility.to_table());
            }
            Err(Failure::Rejected(format!("alignment violates {why}")))
        }
        _ => {
            let why = eval.inner_error.unwrap_or_else(|| "inner problem".into());
            println!("infeasible ({why})");
            Err(Failure::Rejected(why))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_optimize(
    ctx: &Ctx,
    path: &Path,
    solver: Option<SolverKind>,
    max_evals: Option<usize>,
    parallel: bool,
    svg: Option<&Path>,
    json: bool,
) -> CmdResult {
    let c = corridor(path)?;
    let mut cfg = ctx.search_config()?;
    if let Some(s) = solver {
        cfg.solver = s;
    }
    if let Some(m) = max_evals {
        cfg.max_evals = m;
    }
    cfg.parallel |= parallel;
    let report = match optimize(&c, &cfg) {
        Ok(r) => r,
        Err(BilevelError::InfeasibleBaseline(why)) => {
            return Err(Failure::Rejected(format!(
                "baseline alignment is infeasible, repair the corridor first: {why}"
            )))
        }
        Err(e) => return Err(Failure::Input(e.into())),
    };
    let text = report.to_json();
    if let Some(out) = &ctx.out {
        write_file(out, &text)?;
    }
    if json {
        if ctx.out.is_none() {
            println!("{text}");
        }
    } else {
        ctx.say(&report_table(&[(label(path), &report)]));
    }
    if let Some(svg_path) = svg {
        let layers = [
            Layer {
                label: "initial".into(),
                alignment: report.initial_alignment.clone(),
                stroke: Stroke::Solid,
            },
            Layer {
                label: "optimized".into(),
                alignment: report.best_alignment.clone(),
                stroke: Stroke::Dashed,
            },
        ];
        let doc = render_svg(&c, &layers, &RenderSpec::default()).map_err(anyhow::Error::from)?;
        write_file(svg_path, &doc)?;
    }
    Ok(())
}

fn render(
    ctx: &Ctx,
    path: &Path,
    files: &[PathBuf],
    no_baseline: bool,
    view: &ViewArgs,
) -> CmdResult {
    let c = corridor(path)?;
    let spec = view.spec()?;
    let mut layers = Vec::new();
    if !no_baseline {
        layers.push(Layer {
            label: "initial".into(),
            alignment: c.baseline(),
            stroke: Stroke::Solid,
        });
    }
    for f in files {
        layers.push(Layer {
            label: label(f),
            alignment: alignment(f)?,
            stroke: Stroke::for_layer(layers.len()),
        });
    }
    let doc = render_svg(&c, &layers, &spec).map_err(anyhow::Error::from)?;
    ctx.emit(&doc)?;
    Ok(())
}

fn synth(ctx: &Ctx, args: &SynthArgs) -> CmdResult {
    let spec = SynthSpec {
        family: args.family,
        stations: args.stations,
        spacing: args.spacing,
        half_width: args.half_width,
        t_star: args.t_star,
        depth: args.depth,
        grade: args.grade,
        interior_points: args.points,
        noise: args.noise,
        seed: ctx.seed.unwrap_or(0),
        ..SynthSpec::default()
    };
    let c = synth_corridor(&spec).map_err(anyhow::Error::from)?;
    ctx.emit(&c.to_json())?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    corridors: Vec<ManifestCorridor>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    tolerances: Option<Vec<f64>>,
    #[serde(default)]
    search: Option<SearchConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestCorridor {
    name: String,
    /// Corridor file, relative to the manifest.
    #[serde(default)]
    file: Option<PathBuf>,
    #[serde(default)]
    synth: Option<SynthSpec>,
}

fn bench(ctx: &Ctx, path: &Path) -> CmdResult {
    let manifest: Manifest = serde_json::from_str(&read(path)?)
        .with_context(|| format!("invalid bench manifest {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut corridors = Vec::new();
    for entry in &manifest.corridors {
        let c = match (&entry.file, &entry.synth) {
            (Some(f), None) => corridor(&dir.join(f))?,
            (None, Some(spec)) => synth_corridor(spec).map_err(anyhow::Error::from)?,
            _ => {
                return Err(Failure::Input(anyhow!(
                    "corridor `{}` needs exactly one of `file` or `synth`",
                    entry.name
                )))
            }
        };
        corridors.push((entry.name.clone(), c));
    }
    let base = match manifest.search {
        Some(cfg) => cfg,
        None => ctx.search_config()?,
    };
    let seeds = manifest.seeds.unwrap_or_else(|| (0..5).collect());
    let tolerances = manifest
        .tolerances
        .unwrap_or_else(|| DEFAULT_TOLERANCES.to_vec());
    let result = match run_bench(&corridors, &base, &seeds, &tolerances) {
        Ok(r) => r,
        Err(BilevelError::InfeasibleBaseline(why)) => return Err(Failure::Rejected(why)),
        Err(e) => return Err(Failure::Input(e.into())),
    };
    if let Some(out) = &ctx.out {
        write_file(
            out,
            &serde_json::to_string_pretty(&result).map_err(anyhow::Error::from)?,
        )?;
    }
    ctx.say(&result.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let ctx = Ctx {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    let result = match &cli.command {
        Command::Validate { corridor } => validate(&ctx, corridor),
        Command::Evaluate {
            corridor,
            alignment,
        } => evaluate(&ctx, corridor, alignment),
        Command::Optimize {
            corridor,
            solver,
            max_evals,
            parallel,
            svg,
            json,
        } => run_optimize(
            &ctx,
            corridor,
            *solver,
            *max_evals,
            *parallel,
            svg.as_deref(),
            *json,
        ),
        Command::Render {
            corridor,
            alignments,
            no_baseline,
            view,
        } => render(&ctx, corridor, alignments, *no_baseline, view),
        Command::Synth(args) => synth(&ctx, args),
        Command::Bench { manifest } => bench(&ctx, manifest),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
