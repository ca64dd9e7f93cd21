//! Minimal self-contained SVG plots of CCDF curves (log-y against dB).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::papr::CcdfCurve;
use crate::Result;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    /// `(x in dB, probability)`.
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl PlotSeries {
    pub fn from_curve(curve: &CcdfCurve, label: String, dashed: bool) -> Self {
        PlotSeries {
            label,
            points: curve.gammas_db().into_iter().zip(curve.probs.iter().copied()).collect(),
            dashed,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render `series` with the y axis from `floor` to 1.
pub fn render_ccdf_svg(title: &str, series: &[PlotSeries], floor: f64) -> String {
    let ymin = floor.log10().floor();
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, p) in &s.points {
            if p >= floor {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
            }
        }
    }
    if !xmin.is_finite() {
        (xmin, xmax) = (-10.0, 10.0);
    }
    xmin = (xmin / 5.0).floor() * 5.0;
    xmax = ((xmax / 5.0).ceil() * 5.0).max(xmin + 5.0);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * pw;
    let sy = |p: f64| TOP + (p.log10() / ymin) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    for d in 0..=(-ymin as i32) {
        let y = sy(10f64.powi(-d));
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e-{d}</text>",
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut x = xmin;
    while x <= xmax + 1e-9 {
        let px = sx(x);
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{TOP}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>\
             <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x}</text>",
            TOP + ph,
            TOP + ph + 16.0
        );
        x += 5.0;
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">threshold (dB)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">CCDF</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|&&(x, p)| p >= floor && x >= xmin && x <= xmax)
            .map(|&(x, p)| format!("{:.2},{:.2}", sx(x), sy(p)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 28.0,
            lx + 34.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_ccdf_svg(path: &Path, title: &str, series: &[PlotSeries], floor: f64) -> Result<()> {
    fs::write(path, render_ccdf_svg(title, series, floor))?;
    Ok(())
}
