//! Minimal static SVG plots.

use std::fmt::Write as _;

use crate::persistence::PersistenceDiagram;

const W: f64 = 480.0;
const H: f64 = 480.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            v.filter(|x| x.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let (mut x0, mut x1) = span(&mut xs.clone());
        let (mut y0, mut y1) = span(&mut ys.clone());
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = write!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
    let _ = write!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    let _ = write!(s, r#"<text x="{PAD}" y="{}" text-anchor="start">{:.3}</text>"#, H - PAD + 14.0, f.x0);
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, W - PAD, H - PAD + 14.0, f.x1);
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, H - PAD, f.y0);
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, PAD + 8.0, f.y1);
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn dot(s: &mut String, x: f64, y: f64, color: &str) {
    let _ = write!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}" fill-opacity="0.8"/>"#);
}

fn line(s: &mut String, a: (f64, f64), b: (f64, f64), color: &str, dash: bool) {
    let style = if dash { r#" stroke-dasharray="5,4""# } else { "" };
    let _ = write!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"{style}/>"#,
        a.0, a.1, b.0, b.1
    );
}

/// Scatter of 2-D points; `groups[i]` picks the colour of point `i`.
pub fn scatter(title: &str, points: &[(f64, f64)], groups: Option<&[usize]>) -> String {
    let f = Frame::fit(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut s = open(title, &f, "x", "y");
    for (i, p) in points.iter().enumerate() {
        let g = groups.map_or(0, |g| g[i]);
        dot(&mut s, f.px(p.0), f.py(p.1), PALETTE[g % PALETTE.len()]);
    }
    s.push_str("</svg>\n");
    s
}

/// Birth/death plot of dims 0 and 1. Essential classes sit on the top
/// edge. `threshold` draws `death = birth + t` for each `(dim, t)`.
pub fn diagram(title: &str, pd: &PersistenceDiagram, threshold: &[(usize, f64)]) -> String {
    let finite_max = pd
        .features
        .iter()
        .flat_map(|f| [f.birth, f.death])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let top = if finite_max > 0.0 { finite_max * 1.05 } else { 1.0 };
    let f = Frame { x0: 0.0, x1: top, y0: 0.0, y1: top };
    let mut s = open(title, &f, "birth", "death");
    line(&mut s, (f.px(0.0), f.py(0.0)), (f.px(top), f.py(top)), "gray", false);
    for &(dim, t) in threshold {
        if t.is_finite() && t < top {
            line(&mut s, (f.px(0.0), f.py(t)), (f.px(top - t), f.py(top)), PALETTE[dim % 2], true);
        }
    }
    for feat in &pd.features {
        let d = if feat.death.is_finite() { feat.death } else { top };
        dot(&mut s, f.px(feat.birth), f.py(d), PALETTE[feat.dim % 2]);
    }
    s.push_str("</svg>\n");
    s
}

/// Line plot of several named series over shared x values.
pub fn trend(title: &str, xlabel: &str, xs: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let f = Frame::fit(xs.iter().copied(), series.iter().flat_map(|(_, ys)| ys.iter().copied()));
    let mut s = open(title, &f, xlabel, "value");
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| (f.px(x), f.py(y)))
            .collect();
        for w in pts.windows(2) {
            line(&mut s, w[0], w[1], color, false);
        }
        for p in &pts {
            dot(&mut s, p.0, p.1, color);
        }
        let _ = write!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            PAD + 6.0,
            PAD + 14.0 * (k + 1) as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
