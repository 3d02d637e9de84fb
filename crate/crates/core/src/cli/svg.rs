//! Minimal SVG line plots.

use std::fmt::Write;

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

/// One panel of a figure.
#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    /// Fixed y range, otherwise taken from the data.
    pub y_range: Option<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, p: &Panel, top: f64) {
    let (x0, x1) = range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)));
    let (y0, y1) = p
        .y_range
        .unwrap_or_else(|| range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1))));
    let w = WIDTH - MARGIN_L - MARGIN_R;
    let h = PANEL_HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * w;
    let sy = |y: f64| top + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * h;

    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_L}" y="{}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
        top + MARGIN_T
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + 0.5 * w,
        top + 18.0,
        escape(&p.title)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            sx(xv),
            top + MARGIN_T + h + 16.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN_L - 6.0,
            sy(yv) + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        MARGIN_L + 0.5 * w,
        top + PANEL_HEIGHT - 6.0,
        escape(&p.xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{y}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(&p.ylabel),
        y = top + MARGIN_T + 0.5 * h
    );

    for (i, s) in p.series.iter().enumerate() {
        // a gap in the data breaks the polyline
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                runs.last_mut().expect("nonempty").push((x, y.clamp(y0, y1)));
            } else if !runs.last().expect("nonempty").is_empty() {
                runs.push(Vec::new());
            }
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        for run in runs.iter().filter(|r| r.len() > 1) {
            let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                s.color,
                pts.join(" ")
            );
        }
        let ly = top + MARGIN_T + 14.0 + 16.0 * i as f64;
        let lx = MARGIN_L + w - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.5"{dash}/>"#,
            lx + 24.0,
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
}

/// Stacks the panels vertically.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, p, PANEL_HEIGHT * i as f64);
    }
    out.push_str("</svg>\n");
    out
}
