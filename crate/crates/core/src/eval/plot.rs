//! Minimal static SVG charts.

use std::fmt::Write;

use super::bench::BenchGroup;
use super::MetricReport;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Upper axis bound rounded to a 1/2/5 step.
fn nice_max(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let p = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * p).find(|&m| m >= v).unwrap_or(10.0 * p)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn axes(svg: &mut String, f: &Frame, title: &str, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0} {y0} V{y1} H{x1}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for i in 0..=5 {
        let xv = f.x.0 + (f.x.1 - f.x.0) * i as f64 / 5.0;
        let yv = f.y.0 + (f.y.1 - f.y.0) * i as f64 / 5.0;
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(svg, r#"<line x1="{px}" y1="{y1}" x2="{px}" y2="{}" stroke="black"/>"#, y1 + 4.0);
        let _ = writeln!(
            svg,
            r#"<text x="{px}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            y1 + 16.0,
            trim(xv)
        );
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            py + 4.0,
            trim(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn legend(svg: &mut String, i: usize, name: &str, color: &str) {
    let y = TOP + 10.0 + 18.0 * i as f64;
    let x = W - RIGHT + 12.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
        x + 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
        x + 26.0,
        y + 4.0,
        escape(name)
    );
}

fn open() -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#)
        + "\n"
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let x_min = xs.clone().fold(f64::INFINITY, f64::min);
    let x_max = xs.fold(f64::NEG_INFINITY, f64::max);
    let y_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).fold(0.0, f64::max);
    let f = Frame {
        x: if x_min < x_max { (x_min, x_max) } else { (0.0, 1.0) },
        y: (0.0, nice_max(y_max)),
    };
    let mut svg = open();
    axes(&mut svg, &f, title, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        legend(&mut svg, i, &s.name, color);
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn scatter_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame {
        x: (0.0, 1.0),
        y: (0.0, 1.0),
    };
    let mut svg = open();
    axes(&mut svg, &f, title, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#,
                f.px(x.clamp(0.0, 1.0)),
                f.py(y.clamp(0.0, 1.0))
            );
        }
        legend(&mut svg, i, &s.name, color);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Error-versus-horizon curves of one benchmark group.
pub fn error_curves(group: &BenchGroup) -> String {
    let series: Vec<Series> = group
        .curves
        .iter()
        .map(|c| Series {
            name: c.method.name().to_string(),
            points: c.errors.iter().enumerate().map(|(k, &e)| ((k + 1) as f64, e)).collect(),
        })
        .collect();
    line_chart(
        &format!("Prediction error ({}, {} simulations)", group.geometry, group.n_sim),
        "frames after the fit window",
        "mean error (px)",
        &series,
    )
}

/// Accuracy against robustness, one point per labelled report.
pub fn ar_plot(reports: &[(String, &MetricReport)]) -> String {
    let series: Vec<Series> = reports
        .iter()
        .filter_map(|(name, r)| {
            r.overall_accuracy.map(|a| Series {
                name: name.clone(),
                points: vec![(r.overall_robustness, a)],
            })
        })
        .collect();
    scatter_chart("Accuracy-robustness", "robustness", "accuracy", &series)
}
