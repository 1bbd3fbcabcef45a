//! Minimal SVG line plots with a log-scale y axis.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub mean: Vec<f64>,
    /// Half-width of the shaded band, if any.
    pub spread: Option<Vec<f64>>,
    pub color: &'static str,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;

pub fn log_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 1usize;
    for s in series {
        n = n.max(s.mean.len());
        for (k, m) in s.mean.iter().enumerate() {
            let sp = s.spread.as_ref().map_or(0.0, |v| v[k]);
            for v in [*m, m - sp, m + sp] {
                if positive(v) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
    }
    if !lo.is_finite() {
        lo = 1e-12;
        hi = 1.0;
    }
    let (l0, l1) = (lo.log10().floor(), hi.log10().ceil().max(lo.log10().floor() + 1.0));
    let px = |k: usize| PAD + (W - 2.0 * PAD) * k as f64 / (n.max(2) - 1) as f64;
    let py = |v: f64| {
        let v = if positive(v) { v.log10() } else { l0 };
        H - PAD - (H - 2.0 * PAD) * ((v - l0) / (l1 - l0)).clamp(0.0, 1.0)
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let _ = writeln!(out, r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - PAD, W - PAD, H - PAD);
    let _ = writeln!(out, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#, H - PAD);
    for d in (l0 as i32)..=(l1 as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(out, r##"<line x1="{PAD}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/>"##, W - PAD);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, PAD - 6.0, y + 4.0);
    }
    for q in 0..=4 {
        let k = (n.max(2) - 1) * q / 4;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{k}</text>"#, px(k), H - PAD + 18.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(xlabel));
    let _ = writeln!(out, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, esc(ylabel));
    for (si, s) in series.iter().enumerate() {
        if let Some(sp) = &s.spread {
            let upper: Vec<String> = s.mean.iter().zip(sp).enumerate().map(|(k, (m, d))| format!("{:.1},{:.1}", px(k), py(m + d))).collect();
            let lower: Vec<String> = s.mean.iter().zip(sp).enumerate().rev().map(|(k, (m, d))| format!("{:.1},{:.1}", px(k), py(m - d))).collect();
            let _ = writeln!(out, r#"<polygon points="{} {}" fill="{}" fill-opacity="0.2" stroke="none"/>"#, upper.join(" "), lower.join(" "), s.color);
        }
        let pts: Vec<String> = s.mean.iter().enumerate().map(|(k, m)| format!("{:.1},{:.1}", px(k), py(*m))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, pts.join(" "), s.color);
        let ly = PAD + 16.0 * si as f64;
        let _ = writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#, W - PAD - 150.0, W - PAD - 130.0, s.color);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, W - PAD - 125.0, ly + 4.0, esc(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
