mod common;

use roadalign_core::geometry::{build_path, Alignment, PieceKind};
use roadalign_core::render::{render_svg, Layer, RenderSpec, Stroke};
use roadalign_core::synth::{synth_corridor, SynthSpec};
use roadalign_core::{Corridor, Point};

/// Canvas position of a world point, computed from the extent directly.
fn oracle_map(c: &Corridor, layers: &[Layer], spec: &RenderSpec) -> impl Fn(Point) -> (f64, f64) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut add = |p: Point| {
        xs.push(p.x);
        ys.push(p.y);
    };
    for s in &c.stations {
        add(s.left_end);
        add(s.right_end);
    }
    add(c.start);
    add(c.end);
    for l in layers {
        l.alignment.points().iter().for_each(|p| add(*p));
    }
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1, y0, y1) = (min(&xs), max(&xs), min(&ys), max(&ys));
    let (w, h) = (
        spec.width - 2.0 * spec.margin,
        spec.height - 2.0 * spec.margin,
    );
    let k = (w / (x1 - x0)).min(h / (y1 - y0));
    let (ox, oy) = ((w - (x1 - x0) * k) / 2.0, (h - (y1 - y0) * k) / 2.0);
    let m = spec.margin;
    move |p: Point| (m + ox + (p.x - x0) * k, m + oy + (y1 - p.y) * k)
}

fn numbers(d: &str) -> Vec<f64> {
    d.split_whitespace()
        .filter_map(|t| t.parse().ok())
        .collect()
}

fn path_commands(svg: &str) -> Vec<String> {
    svg.lines()
        .filter_map(|l| l.strip_prefix(r#"<path d=""#))
        .map(|l| l.trim_end_matches(r#""/>"#).to_string())
        .collect()
}

fn layers_for(c: &Corridor, seed: u64) -> Vec<Layer> {
    let base = c.baseline();
    let mut rng = common::rng(seed);
    let mut pts = base.points().to_vec();
    use rand::Rng;
    for p in &mut pts[1..base.len() - 1] {
        p.y += rng.gen_range(-4.0..4.0);
    }
    let moved = Alignment::from_parts(pts, base.radii()[1..base.len() - 1].to_vec()).unwrap();
    vec![
        Layer {
            label: "initial".into(),
            alignment: base,
            stroke: Stroke::for_layer(0),
        },
        Layer {
            label: "moved".into(),
            alignment: moved,
            stroke: Stroke::for_layer(1),
        },
    ]
}

#[test]
fn one_svg_path_per_piece_with_exact_endpoints() {
    for seed in 0..5 {
        let c = synth_corridor(&SynthSpec {
            t_star: 0.2 + 0.15 * seed as f64,
            ..SynthSpec::default()
        })
        .unwrap();
        let layers = layers_for(&c, seed);
        let spec = RenderSpec::default();
        let svg = render_svg(&c, &layers, &spec).unwrap();
        let map = oracle_map(&c, &layers, &spec);
        let pieces: Vec<_> = layers
            .iter()
            .flat_map(|l| build_path(&l.alignment).unwrap().pieces)
            .collect();
        let cmds = path_commands(&svg);
        assert_eq!(cmds.len(), pieces.len());
        for (cmd, piece) in cmds.iter().zip(&pieces) {
            let v = numbers(cmd);
            let (sx, sy) = map(piece.start_point());
            let (ex, ey) = map(piece.end_point());
            let (ax, ay) = (v[0], v[1]);
            let (bx, by) = (v[v.len() - 2], v[v.len() - 1]);
            assert!((ax - sx).hypot(ay - sy) <= 0.5, "{cmd}");
            assert!((bx - ex).hypot(by - ey) <= 0.5, "{cmd}");
            if let PieceKind::Arc { .. } = piece.kind {
                assert!(cmd.contains(" A "));
                // v = [sx, sy, r, r, rot, large, sweep, ex, ey]
                let flag = v[6];
                let (mx, my) = map(piece.point_at(0.5));
                let cross = (bx - ax) * (my - ay) - (by - ay) * (mx - ax);
                // positive-angle sweeps bulge to the negative side of the chord
                assert_eq!(flag == 1.0, cross < 0.0, "{cmd}");
            } else {
                assert!(cmd.contains(" L "));
            }
        }
    }
}

#[test]
fn strokes_and_structure() {
    let c = synth_corridor(&SynthSpec::default()).unwrap();
    let layers = layers_for(&c, 1);
    let svg = render_svg(&c, &layers, &RenderSpec::default()).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(r#"class="boundary""#).count(), 1);
    assert!(svg.contains(r#"data-label="moved""#));
    assert!(svg.contains(r#"stroke-dasharray="8 4""#));
    assert!(svg.contains("<polyline data-level="));
}

#[test]
fn contours_can_be_disabled() {
    let c = synth_corridor(&SynthSpec::default()).unwrap();
    let spec = RenderSpec {
        contour_interval: None,
        boundary: false,
        ..RenderSpec::default()
    };
    let svg = render_svg(&c, &[], &spec).unwrap();
    assert!(!svg.contains("polyline"));
    assert!(!svg.contains("polygon"));
}

#[test]
fn broken_layers_are_reported() {
    let c = synth_corridor(&SynthSpec::default()).unwrap();
    let mut pts = c.baseline().points().to_vec();
    pts[2] = pts[1] + Point::new(1.0, 1.0);
    let bad = Alignment::from_parts(pts, vec![500.0; 3]).unwrap();
    let layer = Layer {
        label: "bad".into(),
        alignment: bad,
        stroke: Stroke::Solid,
    };
    match render_svg(&c, &[layer], &RenderSpec::default()) {
        Err(e) => assert!(e.to_string().contains("bad"), "{e}"),
        Ok(_) => panic!("broken layer rendered"),
    }
}
