//! Static SVG charts: line plots and correlogram stems with a symmetric band.
//!
//! Each data series is emitted as exactly one element carrying a
//! `data-series` attribute, so outputs can be checked structurally.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 40.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// A named `(x, y)` series; non-finite points break the line.
#[derive(Debug, Clone)]
pub struct LineSeries<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 * lo.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn open(title: &str, frame: &Frame, x_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
    let _ = writeln!(s, r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#444"/>"##, x1 - x0, y1 - y0);
    for k in 0..=4 {
        let fy = frame.y.0 + (frame.y.1 - frame.y.0) * k as f64 / 4.0;
        let fx = frame.x.0 + (frame.x.1 - frame.x.0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 4.0, frame.py(fy) + 4.0, tick(fy));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, frame.px(fx), y1 + 14.0, tick(fx));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 8.0, escape(x_label));
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (k, name) in names.iter().enumerate() {
        let y = MARGIN_T + 14.0 + 14.0 * k as f64;
        let x = WIDTH - MARGIN_R - 140.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x + 18.0,
            PALETTE[k % PALETTE.len()],
            x + 24.0,
            y + 4.0,
            escape(name)
        );
    }
}

/// Overlaid line plot of several series.
pub fn line_plot(title: &str, x_label: &str, series: &[LineSeries]) -> String {
    let frame = Frame {
        x: extent(series.iter().flat_map(|s| s.x.iter().copied())),
        y: extent(series.iter().flat_map(|s| s.y.iter().copied())),
    };
    let mut s = open(title, &frame, x_label);
    for (k, ser) in series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_up = true;
        for (x, y) in ser.x.iter().zip(ser.y) {
            if !(x.is_finite() && y.is_finite()) {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, frame.px(*x), frame.py(*y));
            pen_up = false;
        }
        let _ = writeln!(
            s,
            r#"<path data-series="{}" d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            escape(ser.name),
            d.trim_end(),
            PALETTE[k % PALETTE.len()]
        );
    }
    legend(&mut s, &series.iter().map(|s| s.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Stem plot of correlations at lags `1..=n` with dashed lines at `+-band`.
/// Several series are drawn side by side at each lag.
pub fn stem_plot(title: &str, series: &[(&str, &[f64])], band: f64) -> String {
    let max_lag = series.iter().map(|s| s.1.len()).max().unwrap_or(1).max(1);
    let lim = series
        .iter()
        .flat_map(|s| s.1.iter())
        .fold(band, |a, v| a.max(v.abs()))
        .max(1e-3)
        * 1.1;
    let frame = Frame { x: (0.0, max_lag as f64 + 1.0), y: (-lim, lim) };
    let mut s = open(title, &frame, "lag");
    let (xa, xb) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let _ = writeln!(s, r##"<line x1="{xa:.2}" y1="{0:.2}" x2="{xb:.2}" y2="{0:.2}" stroke="#444"/>"##, frame.py(0.0));
    let _ = writeln!(s, r##"<g data-series="band" stroke="#888" stroke-dasharray="4 3">"##);
    for b in [band, -band] {
        let _ = writeln!(s, r#"<line x1="{xa:.2}" y1="{0:.2}" x2="{xb:.2}" y2="{0:.2}"/>"#, frame.py(b));
    }
    s.push_str("</g>\n");
    let width = 0.6 / series.len().max(1) as f64;
    for (k, (name, vals)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g data-series="{}" stroke="{colour}" fill="{colour}">"#, escape(name));
        for (lag, v) in vals.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let x = frame.px((lag + 1) as f64 - 0.3 + width * (k as f64 + 0.5));
            let (y0, y1) = (frame.py(0.0), frame.py(*v));
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke-width="2"/><circle cx="{x:.2}" cy="{y1:.2}" r="2"/>"#);
        }
        s.push_str("</g>\n");
    }
    legend(&mut s, &series.iter().map(|s| s.0).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_names(svg: &str) -> Vec<String> {
        let doc = roxmltree::Document::parse(svg).expect("well-formed");
        doc.descendants().filter_map(|n| n.attribute("data-series").map(str::to_string)).collect()
    }

    #[test]
    fn line_plot_structure() {
        let x = [0.0, 0.5, 1.0];
        let svg = line_plot(
            "y & <fit>",
            "t",
            &[
                LineSeries { name: "y", x: &x, y: &[1.0, f64::NAN, 3.0] },
                LineSeries { name: "g_hat", x: &x, y: &[1.0, 2.0, 3.0] },
            ],
        );
        assert_eq!(series_names(&svg), ["y", "g_hat"]);
    }

    #[test]
    fn stem_plot_structure() {
        let svg = stem_plot("acf", &[("acf", &[0.5, -0.2, 0.1]), ("pacf", &[0.5, 0.0, f64::NAN])], 0.1);
        assert_eq!(series_names(&svg), ["band", "acf", "pacf"]);
    }

    #[test]
    fn degenerate_ranges_render() {
        let svg = line_plot("flat", "t", &[LineSeries { name: "c", x: &[1.0, 1.0], y: &[2.0, 2.0] }]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        roxmltree::Document::parse(&svg).unwrap();
    }
}
