//! Deterministic SVG line plots of `p_succ` against one scenario parameter.
//!
//! Rows are grouped into series by every identifying column except the
//! x-axis one. Each series becomes a polyline with a circle per point and a
//! 95% interval whisker.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{input, CliError};
use crate::experiment::ResultRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XField {
    Pm,
    RoadLength,
    Density,
    Range,
    Alpha,
    Sigma,
}

impl FromStr for XField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pm" | "malice_prob" => Ok(XField::Pm),
            "L" | "road_length" => Ok(XField::RoadLength),
            "rho" | "density" => Ok(XField::Density),
            "r" => Ok(XField::Range),
            "alpha" => Ok(XField::Alpha),
            "sigma" => Ok(XField::Sigma),
            other => Err(format!(
                "cannot plot against {other:?} (expected pm, L, rho, r, alpha or sigma)"
            )),
        }
    }
}

impl XField {
    fn label(self) -> &'static str {
        match self {
            XField::Pm => "malice probability p_m",
            XField::RoadLength => "road length L (m)",
            XField::Density => "density rho (vehicles/m)",
            XField::Range => "range r (m)",
            XField::Alpha => "path-loss exponent alpha",
            XField::Sigma => "shadowing sigma (dB)",
        }
    }

    fn name(self) -> &'static str {
        match self {
            XField::Pm => "pm",
            XField::RoadLength => "L",
            XField::Density => "rho",
            XField::Range => "r",
            XField::Alpha => "alpha",
            XField::Sigma => "sigma",
        }
    }

    fn value(self, row: &ResultRow) -> Option<f64> {
        match self {
            XField::Pm => Some(row.pm),
            XField::RoadLength => Some(row.road_length),
            XField::Density => row.rho,
            XField::Range => Some(row.r),
            XField::Alpha => row.alpha,
            XField::Sigma => row.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub x: XField,
    pub title: Option<String>,
}

impl Axes {
    pub fn new(x: XField) -> Self {
        Axes { x, title: None }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Identifying columns other than the x axis, as display strings.
fn series_key(row: &ResultRow, x: XField) -> Vec<(&'static str, String)> {
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let fields: [(&'static str, String); 10] = [
        ("method", row.method.clone()),
        ("model", row.model.clone()),
        ("r", fmt_num(row.r)),
        ("alpha", opt(row.alpha)),
        ("sigma", opt(row.sigma)),
        ("rho", opt(row.rho)),
        ("L", fmt_num(row.road_length)),
        ("pm", fmt_num(row.pm)),
        ("trials", row.trials.to_string()),
        ("seed", row.seed.to_string()),
    ];
    fields
        .into_iter()
        .filter(|(name, _)| *name != x.name())
        .collect()
}

/// Points of one series as `(x, p_succ, ci_low, ci_high)`, sorted by x.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

/// Splits rows into series, in order of first appearance.
pub fn group_series(rows: &[ResultRow], x: XField) -> Result<Vec<Series>, CliError> {
    let mut order: Vec<Vec<(&'static str, String)>> = Vec::new();
    let mut members: BTreeMap<usize, Vec<(f64, f64, f64, f64)>> = BTreeMap::new();
    for row in rows {
        let xv = x.value(row).ok_or_else(|| {
            input(format!(
                "cannot plot against `{}`: a {} row has no such column",
                x.name(),
                row.model
            ))
        })?;
        let key = series_key(row, x);
        let idx = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        members
            .entry(idx)
            .or_default()
            .push((xv, row.p_succ, row.ci_low, row.ci_high));
    }
    // Legend labels show only what differs between series.
    let varying: Vec<usize> = (0..order.first().map_or(0, Vec::len))
        .filter(|&f| order.iter().any(|k| k[f].1 != order[0][f].1))
        .collect();
    let mut out = Vec::new();
    for (idx, key) in order.iter().enumerate() {
        let mut points = members.remove(&idx).unwrap_or_default();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(input(format!(
                "series {} has two points at the same `{}`",
                idx + 1,
                x.name()
            )));
        }
        let mut parts = vec![format!("{} {}", key[0].1, key[1].1)];
        parts.extend(varying.iter().filter(|&&f| f > 1).map(|&f| {
            format!(
                "{}={}",
                key[f].0,
                if key[f].1.is_empty() { "-" } else { &key[f].1 }
            )
        }));
        out.push(Series {
            label: parts.join(" "),
            points,
        });
    }
    Ok(out)
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

/// Renders `p_succ` against `axes.x` for every series in `rows`.
pub fn emit_plot(rows: &[ResultRow], axes: &Axes) -> Result<String, CliError> {
    if rows.is_empty() {
        return Err(input("nothing to plot"));
    }
    let series = group_series(rows, axes.x)?;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if x_lo == x_hi {
        let pad = if x_lo == 0.0 { 1.0 } else { x_lo.abs() * 0.1 };
        x_lo -= pad;
        x_hi += pad;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| TOP + (1.0 - v.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    if let Some(title) = &axes.title {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            fmt_num(LEFT + plot_w / 2.0),
            escape(title)
        );
    }

    // Frame, grid and tick labels.
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );
    for t in ticks(0.0, 1.0, 4) {
        let y = fmt_num(sy(t));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##,
            fmt_num(LEFT + plot_w)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            fmt_num(LEFT - 6.0),
            fmt_num(t)
        );
    }
    for t in ticks(x_lo, x_hi, 5) {
        let x = fmt_num(sx(t));
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333"/>"##,
            fmt_num(TOP + plot_h),
            fmt_num(TOP + plot_h + 5.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            fmt_num(TOP + plot_h + 18.0),
            fmt_num((t * 1e6).round() / 1e6)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        fmt_num(LEFT + plot_w / 2.0),
        fmt_num(HEIGHT - 16.0),
        escape(axes.x.label())
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">success probability P_succ</text>"#,
        fmt_num(TOP + plot_h / 2.0),
        fmt_num(TOP + plot_h / 2.0)
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(svg, r#"<g stroke="{color}" fill="{color}">"#);
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{},{}", fmt_num(sx(p.0)), fmt_num(sy(p.1))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        for &(x, p, lo, hi) in &s.points {
            let cx = fmt_num(sx(x));
            if hi > lo {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}"/>"#,
                    fmt_num(sy(lo)),
                    fmt_num(sy(hi))
                );
            }
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{}" r="3"/>"#, fmt_num(sy(p)));
        }
        let _ = writeln!(svg, "</g>");

        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="14" height="4" fill="{color}"/>"#,
            fmt_num(lx),
            fmt_num(ly - 2.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" dominant-baseline="middle" font-size="11">{}</text>"#,
            fmt_num(lx + 20.0),
            fmt_num(ly),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, pm: f64, p: f64) -> ResultRow {
        ResultRow {
            method: method.into(),
            model: "unit_disk".into(),
            r: 250.0,
            alpha: None,
            sigma: None,
            rho: Some(0.05),
            road_length: 3000.0,
            pm,
            trials: 100,
            p_succ: p,
            stderr: 0.01,
            ci_low: p - 0.02,
            ci_high: p + 0.02,
            seed: 1,
            runtime_s: Some(0.5),
        }
    }

    #[test]
    fn one_marker_per_point_and_one_line_per_series() {
        let rows = vec![
            row("simulation", 0.0, 0.9),
            row("simulation", 0.2, 0.6),
            row("analytic", 0.0, 0.88),
            row("analytic", 0.2, 0.61),
            row("simulation", 0.1, 0.7),
        ];
        let svg = emit_plot(&rows, &Axes::new(XField::Pm)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 5);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("simulation unit_disk"));
        assert!(svg.contains("malice probability"));
    }

    #[test]
    fn single_point_series() {
        let svg = emit_plot(&[row("simulation", 0.3, 0.5)], &Axes::new(XField::Pm)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn runtime_does_not_split_series() {
        let mut b = row("simulation", 0.2, 0.6);
        b.runtime_s = Some(9.0);
        let svg = emit_plot(&[row("simulation", 0.0, 0.9), b], &Axes::new(XField::Pm)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn incompatible_axes() {
        assert!(emit_plot(&[], &Axes::new(XField::Pm)).is_err());
        assert!(emit_plot(&[row("simulation", 0.0, 0.9)], &Axes::new(XField::Alpha)).is_err());
        let dup = [row("simulation", 0.1, 0.9), row("simulation", 0.1, 0.8)];
        assert!(emit_plot(&dup, &Axes::new(XField::Pm)).is_err());
    }

    #[test]
    fn title_is_escaped_and_output_is_deterministic() {
        let rows = [row("simulation", 0.0, 0.9), row("simulation", 0.5, 0.5)];
        let axes = Axes {
            x: XField::Pm,
            title: Some("a < b & c".into()),
        };
        let a = emit_plot(&rows, &axes).unwrap();
        assert!(a.contains("a &lt; b &amp; c"));
        assert_eq!(a, emit_plot(&rows, &axes).unwrap());
    }
}
