use std::fmt::Write as _;
use std::path::Path;

use super::{series, AgentKind, SummaryRow};
use crate::engine::ENTITY_NAMES;
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// SVG line chart of mean reduction against sigma, one polyline per
/// `(position, kind)` present in `summary`.
pub fn render_lineplot_svg(summary: &[SummaryRow]) -> Result<String> {
    let mut keys: Vec<(usize, AgentKind)> = summary.iter().map(|r| (r.position, r.agent_kind)).collect();
    keys.sort_unstable();
    keys.dedup();
    if keys.is_empty() {
        return Err(Error::EmptyInput);
    }
    let lines: Vec<((usize, AgentKind), Vec<(f64, f64)>)> =
        keys.into_iter().map(|k| (k, series(summary, k.0, k.1))).collect();

    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &lines {
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    y0 = y0.min(0.0);
    y1 = y1.max(0.0);
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        MARGIN,
        py(0.0),
        WIDTH - MARGIN,
        py(0.0)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN:.2}" y1="{MARGIN:.2}" x2="{MARGIN:.2}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">sigma ({x0:.1} to {x1:.1})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" font-size="12" transform="rotate(-90 15 {:.2})" text-anchor="middle">mean reduction % ({y0:.1} to {y1:.1})</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, ((position, kind), pts)) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let label = format!("{} {}", ENTITY_NAMES[*position], kind.label());
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{label}</title></polyline>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{label}</text>"#,
            WIDTH - MARGIN - 150.0,
            MARGIN + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_lineplot(summary: &[SummaryRow], path: &Path) -> Result<()> {
    let svg = render_lineplot_svg(summary)?;
    std::fs::write(path, svg)?;
    Ok(())
}
