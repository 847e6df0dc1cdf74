//! Minimal static SVG line charts; no styling beyond axes, polylines, and a
//! text legend.

use std::io::Write;
use std::path::Path;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// (t, value) pairs.
    pub points: &'a [(f64, f64)],
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 36.0;

pub fn line_chart(path: &Path, title: &str, series: &[Series]) -> std::io::Result<()> {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let map_x = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let map_y = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<text x="{MARGIN_LEFT}" y="18" font-family="sans-serif" font-size="13">{title}</text>"#
    )?;

    // Axes with min/max labels.
    let x0 = MARGIN_LEFT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    writeln!(
        out,
        r#"<line x1="{x0}" y1="{MARGIN_TOP}" x2="{x0}" y2="{y0}" stroke="black" stroke-width="1"/>"#
    )?;
    writeln!(
        out,
        r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black" stroke-width="1"/>"#,
        WIDTH - MARGIN_RIGHT
    )?;
    for (value, x, y, anchor) in [
        (x_min, x0, y0 + 16.0, "middle"),
        (x_max, WIDTH - MARGIN_RIGHT, y0 + 16.0, "middle"),
    ] {
        writeln!(
            out,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{value:.0}</text>"#
        )?;
    }
    for value in [y_min + pad, y_max - pad] {
        let y = map_y(value);
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{value:.3}</text>"#,
            x0 - 6.0,
            y + 4.0
        )?;
    }

    for (index, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.2},{:.2} ", map_x(x), map_y(y)));
        }
        writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            d.trim_end(),
            s.color
        )?;
        let lx = MARGIN_LEFT + 140.0 * index as f64 + 160.0;
        writeln!(
            out,
            r#"<line x1="{lx}" y1="14" x2="{}" y2="14" stroke="{}" stroke-width="2"/>"#,
            lx + 18.0,
            s.color
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="18" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 24.0,
            s.label
        )?;
    }
    writeln!(out, "</svg>")?;
    out.flush()
}
