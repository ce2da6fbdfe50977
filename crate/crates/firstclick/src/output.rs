//! CSV and SVG emission for scenario reports.
//!
//! All numbers are rendered with 12 significant digits, `.` decimal
//! separator and `\n` line endings, so re-parsing a CSV reproduces the
//! in-memory values to better than 1e-11 relative and identical reports
//! always serialize to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scenario::{CurveReport, EngineKind, ScenarioReport};

/// 12 significant digits, locale-independent.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn curve_file_stem(curve: &CurveReport, fc_index: usize, fc_count: usize) -> String {
    match curve.engine {
        EngineKind::MemorylessPoint => "memoryless_point".into(),
        EngineKind::MemorylessFinite => "memoryless_finite".into(),
        EngineKind::FirstClick => {
            if fc_count > 1 {
                format!("first_click_{fc_index}")
            } else {
                "first_click".into()
            }
        }
    }
}

fn memoryless_csv(curve: &CurveReport) -> String {
    let mut out = String::from("t,density\n");
    for (t, d) in curve.times.iter().zip(&curve.density) {
        let _ = writeln!(out, "{},{}", num(*t), num(*d));
    }
    out
}

fn first_click_csv(curve: &CurveReport) -> String {
    let info = curve.first_click.as_ref().expect("first-click curve carries its bookkeeping");
    let mut out = String::from("attempt_index,t,weight,pmf,density,survival_cumulative\n");
    for (i, t) in curve.times.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            num(*t),
            num(info.weights[i]),
            num(info.pmf[i]),
            num(curve.density[i]),
            num(info.survival_cumulative[i]),
        );
    }
    out
}

fn summary_csv(report: &ScenarioReport) -> String {
    let mut out = String::from(
        "curve,engine,delta_t,peak_time,peak_height,fwhm,mean_arrival,local_maxima_count,\
         total_click_probability,survival_probability,conservation_residual,\
         normalization_integral\n",
    );
    for curve in &report.curves {
        let s = &curve.stats;
        let delta_t = curve.delta_t.map(num).unwrap_or_default();
        let (clicks, survival, residual) = match &curve.first_click {
            Some(fc) => (
                num(fc.weights.iter().sum::<f64>()),
                num(fc.survival_probability),
                num(fc.conservation_residual),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let norm = curve.normalization_integral.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{delta_t},{},{},{},{},{},{clicks},{survival},{residual},{norm}",
            curve.label,
            curve.engine,
            num(s.peak_time),
            num(s.peak_height),
            num(s.fwhm),
            num(s.mean_arrival),
            s.local_maxima_count,
        );
    }
    out
}

fn survival_state_csv(curve: &CurveReport) -> Option<String> {
    let state = curve.first_click.as_ref()?.survival_state.as_ref()?;
    let mut out = String::from("x,re,im,density\n");
    for (x, a) in state.grid().positions().zip(state.amplitudes()) {
        let _ = writeln!(out, "{},{},{},{}", num(x), num(a.re), num(a.im), num(a.norm_sqr()));
    }
    Some(out)
}

/// Write one CSV per curve plus a `summary.csv`; returns the written paths.
///
/// When survival-state snapshots were recorded, each first-click curve also
/// gets a `survival_state_<curve>.csv` with the final never-clicked branch.
pub fn emit_csv(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let fc_count = report.curves.iter().filter(|c| c.engine == EngineKind::FirstClick).count();
    let mut fc_index = 0;
    for curve in &report.curves {
        let stem = curve_file_stem(curve, fc_index, fc_count);
        let content = match curve.engine {
            EngineKind::FirstClick => {
                fc_index += 1;
                first_click_csv(curve)
            }
            _ => memoryless_csv(curve),
        };
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, content)?;
        written.push(path);
        if let Some(snapshot) = survival_state_csv(curve) {
            let path = dir.join(format!("survival_state_{stem}.csv"));
            fs::write(&path, snapshot)?;
            written.push(path);
        }
    }
    let path = dir.join("summary.csv");
    fs::write(&path, summary_csv(report))?;
    written.push(path);
    Ok(written)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn svg_coord(x: f64) -> String {
    format!("{x:.3}")
}

/// Render all curves of a report into one self-contained SVG overlay.
///
/// Pure function of the report: identical reports render to identical bytes.
pub fn render_svg(report: &ScenarioReport) -> Result<String> {
    if report.curves.is_empty() {
        return Err(Error::Usage("cannot render a report without curves".into()));
    }
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    let mut d_max: f64 = 0.0;
    for curve in &report.curves {
        for &t in &curve.times {
            t_min = t_min.min(t);
            t_max = t_max.max(t);
        }
        for &d in &curve.density {
            d_max = d_max.max(d);
        }
    }
    if !(t_max > t_min) {
        t_max = t_min + 1.0;
    }
    if d_max <= 0.0 {
        d_max = 1.0;
    }
    let d_top = 1.05 * d_max;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |t: f64| MARGIN_LEFT + (t - t_min) / (t_max - t_min) * plot_w;
    let to_y = |d: f64| MARGIN_TOP + (1.0 - d / d_top) * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        MARGIN_LEFT,
        xml_escape(&format!("arrival-time distributions: {}", report.scenario.name)),
    );

    // Axes.
    let x_axis_y = MARGIN_TOP + plot_h;
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        svg_coord(MARGIN_LEFT),
        svg_coord(x_axis_y),
        svg_coord(MARGIN_LEFT + plot_w),
        svg_coord(x_axis_y),
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        svg_coord(MARGIN_LEFT),
        svg_coord(MARGIN_TOP),
        svg_coord(MARGIN_LEFT),
        svg_coord(x_axis_y),
    );
    for k in 0..=5 {
        let frac = k as f64 / 5.0;
        let t = t_min + frac * (t_max - t_min);
        let x = to_x(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>",
            svg_coord(x),
            svg_coord(x_axis_y),
            svg_coord(x_axis_y + 5.0),
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{:.3}</text>",
            svg_coord(x),
            svg_coord(x_axis_y + 20.0),
            t,
        );
        let d = frac * d_top;
        let y = to_y(d);
        let _ = writeln!(
            svg,
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>",
            svg_coord(y),
            svg_coord(MARGIN_LEFT - 5.0),
            svg_coord(MARGIN_LEFT),
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{:.3}</text>",
            svg_coord(MARGIN_LEFT - 9.0),
            svg_coord(y + 4.0),
            d,
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">t [t0]</text>",
        svg_coord(MARGIN_LEFT + plot_w / 2.0),
        svg_coord(HEIGHT - 12.0),
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">p(t) [1/t0]</text>",
        svg_coord(MARGIN_TOP + plot_h / 2.0),
        svg_coord(MARGIN_TOP + plot_h / 2.0),
    );

    // Curves.
    for (i, curve) in report.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (t, d) in curve.times.iter().zip(&curve.density) {
            let _ = write!(points, "{},{} ", svg_coord(to_x(*t)), svg_coord(to_y(*d)));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             points=\"{}\"/>",
            points.trim_end(),
        );
    }

    // Legend, keyed by curve label.
    let legend_x = MARGIN_LEFT + plot_w - 260.0;
    for (i, curve) in report.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>",
            svg_coord(legend_x),
            svg_coord(y - 4.0),
            svg_coord(legend_x + 28.0),
            svg_coord(y - 4.0),
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            svg_coord(legend_x + 34.0),
            svg_coord(y),
            xml_escape(&curve.label),
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render and write the overlay figure.
pub fn emit_svg(report: &ScenarioReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, render_svg(report)?)?;
    Ok(())
}
