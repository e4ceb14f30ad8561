//! Minimal deterministic SVG writers: labeled scatter plots, time series
//! with changepoint shading, and node-link graph drawings. All coordinates
//! are formatted with fixed precision so output bytes are reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// 21-color palette: one color per topic plus the undefined category.
const PALETTE: [&str; 21] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
    "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
    "#bcbd22", "#dbdb8d", "#17becf", "#9edae5", "#393b79",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;

struct Viewport {
    min_x: f64,
    min_y: f64,
    scale_x: f64,
    scale_y: f64,
}

impl Viewport {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut min_x, mut min_y) = (f64::MAX, f64::MAX);
        let (mut max_x, mut max_y) = (f64::MIN, f64::MIN);
        for (x, y) in points {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        if min_x > max_x {
            (min_x, max_x, min_y, max_y) = (0.0, 1.0, 0.0, 1.0);
        }
        let span_x = (max_x - min_x).max(1e-9);
        let span_y = (max_y - min_y).max(1e-9);
        Self {
            min_x,
            min_y,
            scale_x: (WIDTH - 2.0 * MARGIN) / span_x,
            scale_y: (HEIGHT - 2.0 * MARGIN) / span_y,
        }
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.min_x) * self.scale_x
    }

    /// SVG y grows downward.
    fn y(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.min_y) * self.scale_y
    }
}

fn svg_open(buf: &mut String) {
    let _ = writeln!(
        buf,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        buf,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
}

fn color_for(order: usize) -> &'static str {
    PALETTE[order % PALETTE.len()]
}

/// Scatter plot with one color per distinct label (sorted) and a legend.
pub fn scatter_svg(points: &[[f64; 2]], labels: &[String], path: &Path) -> std::io::Result<()> {
    let mut order: BTreeMap<&str, usize> = BTreeMap::new();
    for label in labels {
        let next = order.len();
        order.entry(label).or_insert(next);
    }
    let mut buf = String::new();
    svg_open(&mut buf);
    let vp = Viewport::fit(points.iter().map(|p| (p[0], p[1])));
    for (p, label) in points.iter().zip(labels) {
        let _ = writeln!(
            buf,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            vp.x(p[0]),
            vp.y(p[1]),
            color_for(order[label.as_str()]),
        );
    }
    for (label, &idx) in &order {
        let y = 14.0 + 14.0 * idx as f64;
        let _ = writeln!(
            buf,
            "<circle cx=\"10\" cy=\"{y:.1}\" r=\"4\" fill=\"{}\"/><text x=\"18\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\">{label}</text>",
            color_for(idx),
            y + 4.0,
        );
    }
    buf.push_str("</svg>\n");
    std::fs::write(path, buf)
}

/// Time-series polyline with segments between breakpoints shaded in two
/// alternating colors.
pub fn series_svg(values: &[f64], breakpoints: &[usize], path: &Path) -> std::io::Result<()> {
    let mut buf = String::new();
    svg_open(&mut buf);
    let vp = Viewport::fit(values.iter().enumerate().map(|(i, &v)| (i as f64, v)));
    let mut bounds = vec![0usize];
    bounds.extend_from_slice(breakpoints);
    bounds.push(values.len());
    for (seg, pair) in bounds.windows(2).enumerate() {
        let fill = if seg % 2 == 0 { "#c6dbef" } else { "#fbb4b9" };
        let x0 = vp.x(pair[0] as f64);
        let x1 = vp.x(pair[1].saturating_sub(1) as f64);
        let _ = writeln!(
            buf,
            "<rect x=\"{x0:.2}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"0.5\"/>",
            (x1 - x0).max(0.0),
            HEIGHT - 2.0 * MARGIN,
        );
    }
    let mut d = String::new();
    for (i, &v) in values.iter().enumerate() {
        let _ = write!(
            d,
            "{}{:.2},{:.2} ",
            if i == 0 { "M" } else { "L" },
            vp.x(i as f64),
            vp.y(v)
        );
    }
    let _ = writeln!(
        buf,
        "<path d=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"/>",
        d.trim_end()
    );
    buf.push_str("</svg>\n");
    std::fs::write(path, buf)
}

/// Node-link drawing; node radius grows with total degree.
pub fn graph_svg(
    positions: &[[f64; 2]],
    edges: &[(u32, u32)],
    degrees: &[u32],
    path: &Path,
) -> std::io::Result<()> {
    let mut buf = String::new();
    svg_open(&mut buf);
    let vp = Viewport::fit(positions.iter().map(|p| (p[0], p[1])));
    for &(a, b) in edges {
        let (pa, pb) = (positions[a as usize], positions[b as usize]);
        let _ = writeln!(
            buf,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#9ecae1\" stroke-width=\"0.5\" stroke-opacity=\"0.6\"/>",
            vp.x(pa[0]),
            vp.y(pa[1]),
            vp.x(pb[0]),
            vp.y(pb[1]),
        );
    }
    let max_degree = degrees.iter().copied().max().unwrap_or(1).max(1) as f64;
    for (p, &deg) in positions.iter().zip(degrees) {
        let r = 1.5 + 6.0 * (deg as f64 / max_degree).sqrt();
        let _ = writeln!(
            buf,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r:.2}\" fill=\"#3182bd\" fill-opacity=\"0.8\"/>",
            vp.x(p[0]),
            vp.y(p[1]),
        );
    }
    buf.push_str("</svg>\n");
    std::fs::write(path, buf)
}
