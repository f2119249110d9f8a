//! Minimal SVG line charts for the three ACC panels.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::acc::AccParams;
use crate::dynamics::TrajectoryLog;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
/// Polylines are thinned to at most this many vertices.
const MAX_POINTS: usize = 1200;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Panel file stems in output order.
pub const PANELS: [&str; 3] = ["speed", "cbf", "input"];

#[derive(Debug, Clone)]
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    color: &'static str,
    dashed: bool,
}

struct Chart {
    x_label: &'static str,
    y_label: &'static str,
    series: Vec<Series>,
}

/// Writes `speed.svg`, `cbf.svg` and `input.svg` into `dir`, one line per
/// labelled log.
pub fn render_plots(logs: &[(&str, &TrajectoryLog)], params: &AccParams, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if logs.is_empty() {
        return Err(Error::Precondition("nothing to plot".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let colored = |i: usize| PALETTE[i % PALETTE.len()];
    let trace = |log: &TrajectoryLog, f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        (0..log.len()).map(|k| (log.times[k], f(k))).collect()
    };

    let mut speed = Vec::new();
    let mut cbf = Vec::new();
    let mut input = Vec::new();
    for (i, (label, log)) in logs.iter().enumerate() {
        let series = |points| Series {
            label: label.to_string(),
            points,
            color: colored(i),
            dashed: false,
        };
        speed.push(series(trace(log, &|k| log.states[k][0])));
        cbf.push(series(trace(log, &|k| {
            let x = &log.states[k];
            x[2] - params.time_headway * x[0]
        })));
        input.push(series(trace(log, &|k| log.controls[k][0] / params.weight())));
    }

    let (first_label, first) = logs[0];
    let span = first.times.first().copied().zip(first.times.last().copied()).unwrap_or((0.0, 1.0));
    let reference = |label: &str, points| Series {
        label: label.to_string(),
        points,
        color: "#555555",
        dashed: true,
    };
    speed.push(reference("v_d", vec![(span.0, params.desired_speed), (span.1, params.desired_speed)]));
    let mut lead = reference(&format!("v_l ({first_label})"), trace(first, &|k| first.states[k][1]));
    lead.color = "#999999";
    speed.push(lead);
    cbf.push(reference("h = 0", vec![(span.0, 0.0), (span.1, 0.0)]));

    let charts = [
        Chart {
            x_label: "t (s)",
            y_label: "v_f (m/s)",
            series: speed,
        },
        Chart {
            x_label: "t (s)",
            y_label: "h (m)",
            series: cbf,
        },
        Chart {
            x_label: "t (s)",
            y_label: "u / (M g)",
            series: input,
        },
    ];
    let mut written = Vec::new();
    for (stem, chart) in PANELS.iter().zip(&charts) {
        let path = dir.join(format!("{stem}.svg"));
        std::fs::write(&path, chart.to_svg()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Roughly five "nice" tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    fn to_svg(&self) -> String {
        let (x0, x1) = bounds(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let (y0, y1) = bounds(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                MARGIN_TOP + plot_h,
                MARGIN_TOP + plot_h + 5.0,
                MARGIN_TOP + plot_h + 18.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 5.0,
                MARGIN_LEFT - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
            let mut pts: Vec<(f64, f64)> = s.points.iter().step_by(stride).copied().collect();
            if let Some(last) = s.points.last() {
                if pts.last() != Some(last) {
                    pts.push(*last);
                }
            }
            let coords: Vec<String> = pts
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                s.color,
                coords.join(" ")
            );
            let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 22.0,
                ly - 4.0,
                s.color,
                lx + 28.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_nice() {
        assert_eq!(ticks(0.0, 70.0), vec![0.0, 20.0, 40.0, 60.0]);
        assert_eq!(ticks(-1.0, 1.0), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn flat_series_gets_padded_bounds() {
        let (lo, hi) = bounds([3.0, 3.0].into_iter());
        assert!(lo < 3.0 && hi > 3.0);
    }
}
