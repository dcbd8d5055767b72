//! Static SVG line charts. Output is a pure function of the input data.

use std::fmt::Write as _;

use crate::backlog::{FfrBin, FfrBinSeries, SprintFlow};

pub const BUG_COLOR: &str = "#d62728";
pub const FEATURE_COLOR: &str = "#1f77b4";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick step from {1, 2, 5} x 10^k giving at most `target` intervals.
fn nice_step(span: f64, target: u32) -> f64 {
    if span <= 0.0 || !span.is_finite() {
        return 1.0;
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw * (1.0 - 1e-12))
        .unwrap_or(10.0 * mag)
}

fn label(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x1 - self.x0).max(f64::MIN_POSITIVE);
        LEFT + (x - self.x0) / span * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - y / self.y1 * (HEIGHT - TOP - BOTTOM)
    }
}

struct Chart {
    out: String,
    frame: Frame,
}

impl Chart {
    fn new(title: &str, x_label: &str, y_label: &str, x0: f64, x1: f64, y_max: f64) -> Chart {
        let y_step = nice_step(y_max, 5);
        let y1 = (y_max / y_step).ceil().max(1.0) * y_step;
        let frame = Frame { x0, x1, y1 };
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );

        let (bx, by) = (HEIGHT - BOTTOM, LEFT);
        let _ = writeln!(
            out,
            r##"<path d="M{by:.2},{TOP:.2}V{bx:.2}H{:.2}" fill="none" stroke="#333"/>"##,
            WIDTH - RIGHT
        );
        let mut k = 0.0;
        while k <= y1 * (1.0 + 1e-9) {
            let y = frame.py(k);
            let _ = writeln!(
                out,
                r##"<line x1="{by:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                WIDTH - RIGHT,
                by - 6.0,
                y + 4.0,
                label(k)
            );
            k += y_step;
        }
        let x_step = nice_step(x1 - x0, 10);
        let mut t = (x0 / x_step).ceil() * x_step;
        while t <= x1 + 1e-9 {
            let x = frame.px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{bx:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                bx + 5.0,
                bx + 18.0,
                label(t)
            );
            t += x_step;
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            HEIGHT - 14.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            escape(y_label)
        );
        Chart { out, frame }
    }

    /// Draws `points` as a line, breaking at `None` values, with a marker at
    /// every defined point.
    fn series(&mut self, name: &str, color: &str, points: &[(f64, Option<f64>)]) {
        let _ = writeln!(
            self.out,
            r#"<g class="series" data-name="{}" stroke="{color}" fill="{color}">"#,
            escape(name)
        );
        for run in points.split(|(_, y)| y.is_none()).filter(|r| !r.is_empty()) {
            let coords: Vec<String> = run
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", self.frame.px(x), self.frame.py(y.unwrap_or(0.0))))
                .collect();
            if coords.len() > 1 {
                let _ = writeln!(
                    self.out,
                    r#"<polyline points="{}" fill="none" stroke-width="1.5"/>"#,
                    coords.join(" ")
                );
            }
            for c in &coords {
                let (x, y) = c.split_once(',').unwrap_or_default();
                let _ = writeln!(self.out, r#"<circle cx="{x}" cy="{y}" r="2.5" stroke="none"/>"#);
            }
        }
        self.out.push_str("</g>\n");
    }

    fn hline(&mut self, y: f64) {
        let py = self.frame.py(y);
        let _ = writeln!(
            self.out,
            r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
            WIDTH - RIGHT
        );
    }

    fn finish(mut self, legend: &[(&str, &str)]) -> String {
        let x = WIDTH - RIGHT - 110.0;
        for (i, (name, color)) in legend.iter().enumerate() {
            let y = TOP + 8.0 + i as f64 * 18.0;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x:.2}" y="{:.2}" width="14" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 2.0,
                x + 20.0,
                y + 4.0,
                escape(name)
            );
        }
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Feature-bug balance chart for one closure-age bin: normalized share of
/// closed bugs and features per day of closure age.
pub fn ffr_chart(
    repo: &str,
    bin: FfrBin,
    bug: Option<&FfrBinSeries>,
    feature: Option<&FfrBinSeries>,
) -> String {
    let (lo, hi) = bin.bounds();
    let pts = |s: Option<&FfrBinSeries>| -> Vec<(f64, Option<f64>)> {
        s.map(|s| {
            s.points
                .iter()
                .map(|p| (p.age_days as f64, Some(p.normalized)))
                .collect()
        })
        .unwrap_or_default()
    };
    let (b, f) = (pts(bug), pts(feature));
    let y_max = b
        .iter()
        .chain(&f)
        .filter_map(|(_, y)| *y)
        .fold(0.0, f64::max)
        .max(0.1);
    let mut c = Chart::new(
        &format!("{repo}: closed within {} days", bin.label()),
        "closure age (days)",
        "normalized count",
        lo as f64,
        (hi - 1) as f64,
        y_max,
    );
    c.series("bug", BUG_COLOR, &b);
    c.series("feature", FEATURE_COLOR, &f);
    c.finish(&[("bug", BUG_COLOR), ("feature", FEATURE_COLOR)])
}

/// Outflow / (inflow + spillover) per sprint for bugs and features, with
/// a dashed reference line at 1.
pub fn flow_chart(repo: &str, flows: &[SprintFlow]) -> String {
    let b: Vec<(f64, Option<f64>)> = flows
        .iter()
        .map(|s| (s.sprint_index as f64, s.bug.ratio))
        .collect();
    let f: Vec<(f64, Option<f64>)> = flows
        .iter()
        .map(|s| (s.sprint_index as f64, s.feature.ratio))
        .collect();
    let y_max = b.iter().chain(&f).filter_map(|(_, y)| *y).fold(1.0, f64::max);
    let x1 = flows.len().saturating_sub(1).max(1) as f64;
    let mut c = Chart::new(
        &format!("{repo}: inflow-outflow ratio per sprint"),
        "sprint (oldest = 0)",
        "outflow / (inflow + spillover)",
        0.0,
        x1,
        y_max,
    );
    c.hline(1.0);
    c.series("bug", BUG_COLOR, &b);
    c.series("feature", FEATURE_COLOR, &f);
    c.finish(&[("bug", BUG_COLOR), ("feature", FEATURE_COLOR)])
}
