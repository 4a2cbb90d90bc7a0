//! Minimal self-contained SVG figures.

use std::collections::BTreeSet;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub radius: f64,
    /// Join consecutive points with a polyline.
    pub line: bool,
}

impl Series {
    pub fn scatter(points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Series {
            points,
            color,
            radius: 2.5,
            line: false,
        }
    }

    pub fn curve(points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Series {
            points,
            color,
            radius: 2.5,
            line: true,
        }
    }
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed ranges; otherwise fitted to the data.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    /// Collapse scatter points that land on the same pixel.
    pub dedupe: bool,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            x_range: None,
            y_range: None,
            dedupe: false,
        }
    }

    fn fitted(&self, pick: impl Fn(&(f64, f64)) -> f64) -> (f64, f64) {
        let vals = self.series.iter().flat_map(|s| s.points.iter().map(&pick)).filter(|v| v.is_finite());
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        (lo - pad, hi + pad)
    }

    pub fn render(&self) -> String {
        let (x0, x1) = self.x_range.unwrap_or_else(|| self.fitted(|p| p.0));
        let (y0, y1) = self.y_range.unwrap_or_else(|| self.fitted(|p| p.1));
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;
        let inside = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && x >= x0 && x <= x1 && y >= y0 && y <= y1;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let yb = MARGIN_T + ph;
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{yb}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#, yb + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#, yb + 18.0, label(t));
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/>"#, MARGIN_L - 5.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_L - 8.0, y + 4.0, label(t));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            MARGIN_T + ph / 2.0,
            escape(&self.y_label)
        );

        for series in &self.series {
            let pts: Vec<(f64, f64)> = series.points.iter().filter(|p| inside(p)).map(|&(x, y)| (sx(x), sy(y))).collect();
            if series.line && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    path.join(" "),
                    series.color
                );
            }
            let _ = writeln!(s, r#"<g fill="{}">"#, series.color);
            if self.dedupe {
                // one rect per horizontal run of occupied pixels
                let cells: BTreeSet<(i64, i64)> = pts.iter().map(|&(x, y)| (y.round() as i64, x.round() as i64)).collect();
                let mut run: Option<(i64, i64, i64)> = None;
                let flush = |r: (i64, i64, i64), s: &mut String| {
                    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="1"/>"#, r.1, r.0, r.2 - r.1 + 1);
                };
                for (y, x) in cells {
                    run = match run {
                        Some((ry, x0, x1)) if ry == y && x == x1 + 1 => Some((ry, x0, x)),
                        Some(r) => {
                            flush(r, &mut s);
                            Some((y, x, x))
                        }
                        None => Some((y, x, x)),
                    };
                }
                if let Some(r) = run {
                    flush(r, &mut s);
                }
            } else {
                for (x, y) in pts {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{}"/>"#, series.radius);
                }
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Heatmap of `values[i][j]` over an `x × y` grid, darker for larger values.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let mut plot = Plot::new(title, x_label, y_label);
    let span = |v: &[f64]| {
        let d = if v.len() > 1 { 0.5 * (v[1] - v[0]) } else { 0.5 };
        (v[0] - d, v[v.len() - 1] + d)
    };
    plot.x_range = Some(span(xs));
    plot.y_range = Some(span(ys));
    let mut svg = plot.render();
    svg.truncate(svg.len() - "</svg>\n".len());

    let (x0, x1) = span(xs);
    let (y0, y1) = span(ys);
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let cw = pw / xs.len() as f64;
    let ch = ph / ys.len() as f64;
    let max = values.iter().flatten().copied().fold(0.0, f64::max);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let level = if max > 0.0 { (255.0 * (1.0 - v / max)).round() as u8 } else { 255 };
            let x = MARGIN_L + (xs[i] - x0) / (x1 - x0) * pw - 0.5 * cw;
            let y = MARGIN_T + (y1 - ys[j]) / (y1 - y0) * ph - 0.5 * ch;
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({level},{level},255)"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    if !(raw > 0.0 && raw.is_finite()) {
        return Vec::new();
    }
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|&st| st >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    let s = format!("{r}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}
