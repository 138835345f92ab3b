//! Minimal line-chart SVG output.

use std::fmt::Write as _;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 220.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders panels stacked vertically. Series are colored by name, and the
/// name-to-stroke mapping is listed once in a legend block on the right.
pub fn render(panels: &[Panel], x_label: &str, y_label: &str) -> String {
    let mut names: Vec<&str> = Vec::new();
    for s in panels.iter().flat_map(|p| &p.series) {
        if !names.contains(&s.name.as_str()) {
            names.push(&s.name);
        }
    }
    let color = |name: &str| PALETTE[names.iter().position(|n| *n == name).unwrap_or(0) % PALETTE.len()];
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {height}" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = PANEL_HEIGHT - TOP - BOTTOM;
    for (k, panel) in panels.iter().enumerate() {
        let y0 = k as f64 * PANEL_HEIGHT;
        let (xmin, xmax) = extent(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (ymin, ymax) = extent(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * plot_w;
        let sy = |y: f64| y0 + TOP + (ymax - y) / (ymax - ymin) * plot_h;
        let _ = writeln!(out, r#"<g class="panel">"#);
        let _ = writeln!(
            out,
            r#"<text x="{LEFT}" y="{:.2}" font-weight="bold">{}</text>"#,
            y0 + 18.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{:.2}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##,
            y0 + TOP
        );
        let (bx, by) = (y0 + TOP + plot_h + 14.0, y0 + TOP + plot_h + 30.0);
        let _ = writeln!(out, r#"<text x="{LEFT}" y="{bx:.2}">{}</text>"#, fmt_num(xmin));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{bx:.2}" text-anchor="end">{}</text>"#,
            LEFT + plot_w,
            fmt_num(xmax)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{by:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            y0 + TOP + 4.0,
            fmt_num(ymax)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            y0 + TOP + plot_h,
            fmt_num(ymin)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            y0 + TOP + plot_h / 2.0,
            y0 + TOP + plot_h / 2.0,
            escape(y_label)
        );
        if ymin < 0.0 && ymax > 0.0 {
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
                sy(0.0),
                LEFT + plot_w,
                sy(0.0)
            );
        }
        for s in &panel.series {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" data-series="{}" points="{}"/>"#,
                color(&s.name),
                escape(&s.name),
                pts.join(" ")
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r#"<g class="legend">"#);
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            color(name),
            lx + 26.0,
            y + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

fn fmt_num(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
