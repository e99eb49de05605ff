//! Minimal standalone SVG charts: a multi-series line chart, a bar chart that
//! handles negative values, and grouped bars with optional error whiskers.
//!
//! Output depends only on the inputs, so charts are byte-reproducible.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Linear map from data range to a pixel range, padded so the range is
/// never empty.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(mut lo: f64, mut hi: f64, px_lo: f64, px_hi: f64) -> Self {
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }
}

fn open(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
    s
}

fn y_axis(s: &mut String, y: &Axis) {
    for t in y.ticks(5) {
        let py = y.map(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="#000"/>"##,
        HEIGHT - BOTTOM
    );
}

fn tick_label(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == r.trunc() {
        format!("{r:.0}")
    } else {
        format!("{r}")
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{y:.1}" width="12" height="12" fill="{}"/>"#,
            color(i)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 18.0,
            y + 10.0,
            escape(name)
        );
    }
}

fn y_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Line chart, one polyline with point markers per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (x_lo, x_hi) = if x_lo.is_finite() { (x_lo, x_hi) } else { (0.0, 1.0) };
    let (y_lo, y_hi) = y_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let x = Axis::new(x_lo, x_hi, LEFT, WIDTH - RIGHT);
    let y = Axis::new(y_lo, y_hi, HEIGHT - BOTTOM, TOP);

    let mut s = open(title, x_label, y_label);
    y_axis(&mut s, &y);
    for t in x.ticks(5) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x.map(t),
            HEIGHT - BOTTOM + 16.0,
            tick_label(t)
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(a, b)| format!("{:.1},{:.1}", x.map(a), y.map(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            color(i),
            pts.join(" ")
        );
        for &(a, b) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                x.map(a),
                y.map(b),
                color(i)
            );
        }
    }
    legend(&mut s, &series.iter().map(|x| x.name.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// One bar per label; negative values hang below the zero line.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let groups: Vec<String> = bars.iter().map(|b| b.0.clone()).collect();
    let values: Vec<f64> = bars.iter().map(|b| b.1).collect();
    grouped_bar_chart(title, x_label, y_label, &groups, &[(String::new(), values)], None)
}

/// Bars grouped by `groups`, one colour per series. `errors`, when given,
/// holds a whisker half-length per series and group.
pub fn grouped_bar_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    groups: &[String],
    series: &[(String, Vec<f64>)],
    errors: Option<&[Vec<f64>]>,
) -> String {
    let whisker = |si: usize, gi: usize| {
        errors
            .and_then(|e| e.get(si))
            .and_then(|v| v.get(gi))
            .copied()
            .unwrap_or(0.0)
    };
    let (y_lo, y_hi) = y_range(series.iter().enumerate().flat_map(|(si, (_, vals))| {
        vals.iter()
            .enumerate()
            .flat_map(move |(gi, &v)| [v - whisker(si, gi), v + whisker(si, gi)])
    }));
    let y = Axis::new(y_lo, y_hi, HEIGHT - BOTTOM, TOP);
    let mut s = open(title, x_label, y_label);
    y_axis(&mut s, &y);

    let slot = (WIDTH - RIGHT - LEFT) / groups.len().max(1) as f64;
    let bar = slot * 0.8 / series.len().max(1) as f64;
    let zero = y.map(0.0);
    for (gi, g) in groups.iter().enumerate() {
        let gx = LEFT + slot * gi as f64 + slot * 0.1;
        for (si, (_, vals)) in series.iter().enumerate() {
            let Some(&v) = vals.get(gi) else { continue };
            let bx = gx + bar * si as f64;
            let (top, h) = if v >= 0.0 {
                (y.map(v), zero - y.map(v))
            } else {
                (zero, y.map(v) - zero)
            };
            let _ = writeln!(
                s,
                r#"<rect x="{bx:.1}" y="{top:.1}" width="{:.1}" height="{h:.1}" fill="{}"/>"#,
                bar * 0.95,
                color(si)
            );
            let e = whisker(si, gi);
            if e > 0.0 {
                let cx = bx + bar * 0.475;
                let _ = writeln!(
                    s,
                    r##"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="#000"/>"##,
                    y.map(v - e),
                    y.map(v + e)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + slot * 0.4,
            HEIGHT - BOTTOM + 16.0,
            escape(g)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT}" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke="#000"/>"##,
        WIDTH - RIGHT
    );
    let names: Vec<&str> = series.iter().map(|x| x.0.as_str()).filter(|n| !n.is_empty()).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}
