//! Minimal static SVG line charts for sweep-style report sections.

use std::fmt::Write;

use crate::harness::report::{CellValue, Section};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn cell_f64(v: &CellValue) -> Option<f64> {
    match v {
        CellValue::Int(i) => Some(*i as f64),
        CellValue::Float(f) => Some(*f),
        CellValue::Text(_) => None,
    }
}

/// Render a section as a chart when its layout is recognized. The error
/// curve plots on log-log axes; the sweep tables plot linearly against
/// their first column.
pub fn section_plot(section: &Section) -> Option<String> {
    let (x_col, y_cols, log_log): (usize, Vec<usize>, bool) = match section.name.as_str() {
        "em_error_curve" => (0, vec![1, 2], true),
        "snr_sweep" => (0, vec![1, 2], false),
        "nfe_sweep" => (0, vec![1, 2], false),
        _ => return None,
    };
    let mut series: Vec<(String, Vec<(f64, f64)>)> = y_cols
        .iter()
        .map(|&c| (section.columns[c].clone(), Vec::new()))
        .collect();
    for row in &section.rows {
        let x = cell_f64(&row[x_col])?;
        for (si, &c) in y_cols.iter().enumerate() {
            let y = cell_f64(&row[c])?;
            series[si].1.push((x, y));
        }
    }
    if series.iter().all(|(_, pts)| pts.is_empty()) {
        return None;
    }
    Some(line_chart(
        &section.name,
        &section.columns[x_col],
        series,
        log_log,
    ))
}

fn line_chart(
    title: &str,
    x_label: &str,
    series: Vec<(String, Vec<(f64, f64)>)>,
    log_log: bool,
) -> String {
    let transform = |v: f64| if log_log { v.max(1e-300).log10() } else { v };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in &series {
        for &(x, y) in pts {
            xs.push(transform(x));
            ys.push(transform(y));
        }
    }
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let sx = |v: f64| MARGIN + (transform(v) - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| {
        HEIGHT - MARGIN - (transform(v) - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN)
    };
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{x_label}{}</text>\n",
        WIDTH / 2.0,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        if log_log { " (log-log)" } else { "" },
    );
    let _ = write!(
        svg,
        "<line x1=\"{MARGIN}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN,
        HEIGHT - MARGIN,
    );
    for (si, (label, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = colors[si % colors.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            path.join(" "),
            WIDTH - MARGIN + 4.0,
            MARGIN + 16.0 * si as f64,
        );
        for &(x, y) in pts {
            let _ = write!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
