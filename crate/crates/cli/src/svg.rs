//! Minimal SVG heatmaps.

use std::fmt::Write;

use eulerband_core::flowbox::GridField;
use eulerband_core::spectrum::PseudoPoint;

const CELL_PX: f64 = 4.0;
const MAX_FIELD_CELLS: usize = 128;

/// Viridis-like ramp through five anchors, `v` clamped to `[0, 1]`.
fn color(v: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let v = if v.is_finite() {
        v.clamp(0.0, 1.0)
    } else {
        1.0
    };
    let x = v * 4.0;
    let i = (x.floor() as usize).min(3);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|j| (STOPS[i][j] + f * (STOPS[i + 1][j] - STOPS[i][j])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Rows of `values` run bottom to top.
fn heatmap(values: &[f64], nx: usize, ny: usize, lo: f64, hi: f64, extra: &str) -> String {
    let (w, h) = (nx as f64 * CELL_PX, ny as f64 * CELL_PX);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#
    );
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            let y = (ny - 1 - j) as f64 * CELL_PX;
            let x = i as f64 * CELL_PX;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL_PX}" height="{CELL_PX}" fill="{}"/>"#,
                color(normalize(v, lo, hi))
            );
        }
    }
    s.push_str(extra);
    s.push_str("</svg>\n");
    s
}

/// `|f|` with blocks of cells reduced by their maximum so the image stays small.
pub fn field_heatmap(f: &GridField) -> String {
    let n = f.n();
    let block = n.div_ceil(MAX_FIELD_CELLS);
    let m = n.div_ceil(block);
    let mut cells = vec![0.0f64; m * m];
    for i2 in 0..n {
        for i1 in 0..n {
            let c = &mut cells[(i2 / block) * m + i1 / block];
            *c = c.max(f.get(i1, i2).norm());
        }
    }
    let hi = cells.iter().copied().fold(0.0, f64::max);
    heatmap(&cells, m, m, 0.0, hi, "")
}

/// `log₁₀` resolvent norm over a grid ordered imaginary-major, with the
/// predicted band edges `Re α = ±Λ` drawn as vertical rules.
pub fn resolvent_heatmap(points: &[PseudoPoint], big_lambda: f64) -> String {
    let mut re: Vec<f64> = points.iter().map(|p| p.re).collect();
    re.sort_by(f64::total_cmp);
    re.dedup();
    let nx = re.len().max(1);
    let ny = points.len() / nx;
    let logs: Vec<f64> = points.iter().map(|p| p.resolvent_norm.log10()).collect();
    let finite = logs.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);

    let mut rules = String::new();
    if nx > 1 {
        let (r0, r1) = (re[0], re[nx - 1]);
        let h = ny as f64 * CELL_PX;
        for edge in [-big_lambda, big_lambda] {
            if edge >= r0 && edge <= r1 {
                // cell centers sit at (i + 1/2)·CELL_PX
                let x = ((edge - r0) / (r1 - r0) * (nx - 1) as f64 + 0.5) * CELL_PX;
                let _ = writeln!(
                    rules,
                    r#"<line x1="{x:.3}" y1="0" x2="{x:.3}" y2="{h}" stroke="white" stroke-width="1.5"/>"#
                );
            }
        }
    }
    heatmap(&logs, nx, ny, lo, hi, &rules)
}
