//! Standalone SVG 1.1 charts with byte-stable output.
//!
//! Coordinates are written with three decimals, so identical input always
//! produces identical files.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Data range padded by 5 % (or ±0.5 around a single value).
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    out: String,
}

impl Frame {
    fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let mut frame = Self { x, y, out };
        frame.axes(x_label, y_label);
        frame
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            self.out,
            r#"<rect x="{x0:.3}" y="{y1:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        let mut ticks = String::new();
        for i in 0..=TICKS {
            let t = i as f64 / TICKS as f64;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                ticks,
                r#"<line x1="{px:.3}" y1="{y0:.3}" x2="{px:.3}" y2="{:.3}" stroke="black"/><text x="{px:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 20.0,
                label(xv)
            );
            let _ = writeln!(
                ticks,
                r#"<line x1="{:.3}" y1="{py:.3}" x2="{x0:.3}" y2="{py:.3}" stroke="black"/><text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                label(yv)
            );
        }
        let _ = write!(self.out, "<g class=\"ticks\">\n{ticks}</g>\n");
        let _ = writeln!(
            self.out,
            r#"<text class="x-label" x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let cy = (y0 + y1) / 2.0;
        let _ = writeln!(
            self.out,
            r#"<text class="y-label" x="20" y="{cy:.3}" text-anchor="middle" transform="rotate(-90 20 {cy:.3})">{}</text>"#,
            escape(y_label)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Piecewise-linear blue→red ramp for `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let r = (40.0 + 200.0 * t).round() as u8;
    let b = (220.0 - 190.0 * t).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

/// Reduced coordinate versus response; one `<circle>` per sample.
pub fn scatter_1d(xr: &[f64], y: &[f64], title: &str) -> String {
    let mut f = Frame::new(
        title,
        "x_r,1",
        "y",
        range(xr.iter().copied()),
        range(y.iter().copied()),
    );
    let _ = writeln!(f.out, r#"<g class="markers" fill="steelblue" fill-opacity="0.75" stroke="black" stroke-width="0.5">"#);
    for (x, v) in xr.iter().zip(y) {
        let _ = writeln!(f.out, r#"<circle cx="{:.3}" cy="{:.3}" r="3.5"/>"#, f.px(*x), f.py(*v));
    }
    f.out.push_str("</g>\n");
    f.finish()
}

/// Two reduced coordinates with markers colored by the response.
pub fn scatter_2d(xr1: &[f64], xr2: &[f64], y: &[f64], title: &str) -> String {
    let mut f = Frame::new(
        title,
        "x_r,1",
        "x_r,2",
        range(xr1.iter().copied()),
        range(xr2.iter().copied()),
    );
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let _ = writeln!(f.out, r#"<g class="markers" stroke="black" stroke-width="0.5">"#);
    for ((a, b), v) in xr1.iter().zip(xr2).zip(y) {
        let _ = writeln!(
            f.out,
            r#"<circle cx="{:.3}" cy="{:.3}" r="4" fill="{}"/>"#,
            f.px(*a),
            f.py(*b),
            color((v - lo) / span)
        );
    }
    f.out.push_str("</g>\n");
    let _ = writeln!(
        f.out,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="end">color: y from {} (blue) to {} (red)</text>"#,
        WIDTH - RIGHT,
        TOP - 6.0,
        label(lo),
        label(hi)
    );
    f.finish()
}

/// Eigenvalues on a log10 axis against their index.
pub fn eigen_decay(eigenvalues: &[f64], title: &str) -> String {
    let max = eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = if max > 0.0 { max * 1e-16 } else { 1e-300 };
    let logs: Vec<f64> = eigenvalues.iter().map(|l| l.max(floor).log10()).collect();
    let n = eigenvalues.len().max(1) as f64;
    let mut f = Frame::new(title, "index", "log10(eigenvalue)", (0.5, n + 0.5), range(logs.iter().copied()));
    let points: Vec<String> = logs
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:.3},{:.3}", f.px((i + 1) as f64), f.py(*v)))
        .collect();
    let _ = writeln!(f.out, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, points.join(" "));
    let _ = writeln!(f.out, r#"<g class="markers" fill="steelblue">"#);
    for (i, v) in logs.iter().enumerate() {
        let _ = writeln!(f.out, r#"<circle cx="{:.3}" cy="{:.3}" r="4"/>"#, f.px((i + 1) as f64), f.py(*v));
    }
    f.out.push_str("</g>\n");
    f.finish()
}

/// Grouped bars of eigenvector components; `vectors[j]` is the j-th eigenvector.
pub fn eigvec_bar(vectors: &[Vec<f64>], title: &str) -> String {
    let m = vectors.first().map_or(0, Vec::len);
    let extent = vectors.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12) * 1.1;
    let mut f = Frame::new(title, "variable", "component", (0.5, m as f64 + 0.5), (-extent, extent));
    let palette = ["steelblue", "darkorange", "seagreen", "firebrick"];
    let groups = vectors.len().max(1) as f64;
    let slot = f.px(1.0) - f.px(0.0);
    let bar = 0.8 * slot / groups;
    let zero = f.py(0.0);
    let _ = writeln!(
        f.out,
        r#"<line x1="{LEFT:.3}" y1="{zero:.3}" x2="{:.3}" y2="{zero:.3}" stroke="gray"/>"#,
        WIDTH - RIGHT
    );
    for (j, v) in vectors.iter().enumerate() {
        let _ = writeln!(f.out, r#"<g class="bars" fill="{}">"#, palette[j % palette.len()]);
        for (i, c) in v.iter().enumerate() {
            let x = f.px((i + 1) as f64) - 0.4 * slot + j as f64 * bar;
            let top = f.py(c.max(0.0));
            let height = (f.py(c.min(0.0)) - top).abs();
            let _ = writeln!(f.out, r#"<rect x="{x:.3}" y="{top:.3}" width="{bar:.3}" height="{height:.3}"/>"#);
        }
        f.out.push_str("</g>\n");
        let _ = writeln!(
            f.out,
            r#"<text x="{:.3}" y="{:.3}" fill="{}">w{}</text>"#,
            LEFT + 10.0 + 40.0 * j as f64,
            TOP + 16.0,
            palette[j % palette.len()],
            j + 1
        );
    }
    f.finish()
}
