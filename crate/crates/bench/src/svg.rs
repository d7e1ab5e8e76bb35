//! SVG snapshots of a 2D map with its forest, path and arms.

use std::fmt::Write as _;

use rrdt_core::forest::Path;
use rrdt_core::planners::GraphSnapshot;
use rrdt_core::Environment;

use crate::BenchError;

const ROOT_COLOUR: &str = "#1f5fa8";
const PALETTE: [&str; 8] = [
    "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#ff7f0e",
];

fn colour(tree: u32, root: Option<u32>) -> &'static str {
    if Some(tree) == root {
        ROOT_COLOUR
    } else {
        PALETTE[(rrdt_core::rng::mix64(tree as u64) % PALETTE.len() as u64) as usize]
    }
}

fn xy(p: &[f64]) -> String {
    format!("{:.2},{:.2}", p[0], p[1])
}

/// Obstacles are merged into one rectangle per horizontal run of occupied
/// cells. Tree edges are drawn one polyline each, coloured by tree; the
/// tree holding node 0 (the start) gets a fixed colour.
pub fn render_svg(
    env: &Environment,
    graph: &GraphSnapshot,
    path: Option<&Path>,
    arms: &[Vec<f64>],
) -> Result<String, BenchError> {
    if env.dim() != 2 {
        return Err(BenchError::Render(format!("cannot draw a {}-dimensional map", env.dim())));
    }
    let (lo, hi) = (env.lower(), env.upper());
    let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
    let (nx, ny) = (env.counts()[0], env.counts()[1]);
    let cell = env.cell_size();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="{} {} {w} {h}">"#,
        lo[0], lo[1]
    );
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{w}" height="{h}" fill="white"/>"#, lo[0], lo[1]);

    let _ = writeln!(s, r##"<g class="obstacles" fill="#3a3a3a">"##);
    for y in 0..ny {
        let mut x = 0;
        while x < nx {
            if !env.cell_occupied(&[x, y]) {
                x += 1;
                continue;
            }
            let start = x;
            while x < nx && env.cell_occupied(&[x, y]) {
                x += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                lo[0] + start as f64 * cell[0],
                lo[1] + y as f64 * cell[1],
                (x - start) as f64 * cell[0],
                cell[1]
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let root = graph.tree.first().copied();
    let _ = writeln!(s, r#"<g class="forest" fill="none" stroke-width="0.6">"#);
    for &(a, b) in &graph.edges {
        let _ = writeln!(
            s,
            r#"<polyline class="edge" stroke="{}" points="{} {}"/>"#,
            colour(graph.tree[a as usize], root),
            xy(&graph.nodes[a as usize]),
            xy(&graph.nodes[b as usize])
        );
    }
    let _ = writeln!(s, "</g>");

    if let Some(p) = path {
        let pts: Vec<String> = p.waypoints.iter().map(|q| xy(q.coords())).collect();
        let _ = writeln!(
            s,
            r##"<polyline class="path" fill="none" stroke="#e00000" stroke-width="2" points="{}"/>"##,
            pts.join(" ")
        );
    }
    for a in arms {
        let _ = writeln!(
            s,
            r##"<circle class="arm" cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="#f2c200" stroke-width="1.2"/>"##,
            a[0], a[1]
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
