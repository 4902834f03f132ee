//! Self-contained SVG emitters for line plots and grid heatmaps. No
//! external renderer; output is deterministic for identical inputs.

use std::fmt::Write as _;

/// One polyline in a line plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// CSS color, e.g. "#1f77b4".
    pub color: String,
    /// Optional stroke-dasharray, e.g. "6 3".
    pub dash: Option<String>,
    pub points: Vec<(f64, f64)>,
}

const PLOT_WIDTH: f64 = 720.0;
const PLOT_HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo > 0.0 {
        lo = 0.0;
    }
    if (hi - lo).abs() < 1e-12 {
        hi = lo + 1.0;
    }
    (lo, hi)
}

/// Renders series as an SVG line chart with axes, ticks, and a legend.
/// Returns the empty chart frame when every series is empty.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let inner_w = PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let inner_h = PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * inner_w;
    let sy = |y: f64| MARGIN_TOP + inner_h - (y - y0) / (y1 - y0) * inner_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PLOT_WIDTH} {PLOT_HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{PLOT_WIDTH}\" height=\"{PLOT_HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        PLOT_WIDTH / 2.0,
        escape(title)
    );

    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * f64::from(i) / 4.0;
        let fy = y0 + (y1 - y0) * f64::from(i) / 4.0;
        let px = sx(fx);
        let py = sy(fy);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>",
            MARGIN_TOP,
            MARGIN_TOP + inner_h
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + inner_w
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            MARGIN_TOP + inner_h + 16.0,
            tick_label(fx)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            MARGIN_LEFT - 6.0,
            py + 4.0,
            tick_label(fy)
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{inner_w:.1}\" \
         height=\"{inner_h:.1}\" fill=\"none\" stroke=\"#333\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + inner_w / 2.0,
        PLOT_HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        MARGIN_TOP + inner_h / 2.0,
        MARGIN_TOP + inner_h / 2.0,
        escape(y_label)
    );

    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let mut path = String::new();
        for (x, y) in &s.points {
            let _ = write!(path, "{:.1},{:.1} ", sx(*x), sy(*y));
        }
        let dash = s
            .dash
            .as_deref()
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>",
            path.trim_end(),
            s.color
        );
    }

    for (i, s) in series.iter().enumerate() {
        let ly = MARGIN_TOP + 14.0 + 16.0 * i as f64;
        let lx = MARGIN_LEFT + 12.0;
        let dash = s
            .dash
            .as_deref()
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" \
             stroke-width=\"1.8\"{dash}/>",
            lx + 26.0,
            s.color
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 32.0,
            ly + 4.0,
            escape(&s.label)
        );
    }

    out.push_str("</svg>\n");
    out
}

/// Renders a row-major grid of values as a colored-cell SVG. Values are
/// scaled by the grid maximum; an all-zero grid renders the low color.
pub fn heatmap(title: &str, values: &[f64], width: usize) -> String {
    assert!(width > 0 && values.len() % width == 0, "values must fill whole rows");
    let height = values.len() / width;
    let cell = (600 / width.max(height)).clamp(4, 24);
    let grid_w = cell * width;
    let grid_h = cell * height;
    let top = 28;
    let max = values.iter().copied().fold(0.0_f64, f64::max);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" \
         font-family=\"sans-serif\" font-size=\"13\">",
        grid_w,
        grid_h + top
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>",
        grid_w / 2,
        escape(title)
    );
    for (idx, &v) in values.iter().enumerate() {
        let x = (idx % width) * cell;
        let y = (idx / width) * cell + top;
        let t = if max > 0.0 { (v / max).clamp(0.0, 1.0) } else { 0.0 };
        let _ = writeln!(
            out,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>",
            ramp(t)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Two-segment color ramp: deep blue through magenta to yellow.
fn ramp(t: f64) -> String {
    let lerp = |a: u8, b: u8, f: f64| (f64::from(a) + (f64::from(b) - f64::from(a)) * f) as u8;
    let (lo, hi, f) = if t < 0.5 {
        ((13, 8, 135), (204, 71, 120), t * 2.0)
    } else {
        ((204, 71, 120), (240, 249, 33), (t - 0.5) * 2.0)
    };
    format!("#{:02x}{:02x}{:02x}", lerp(lo.0, hi.0, f), lerp(lo.1, hi.1, f), lerp(lo.2, hi.2, f))
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 100.0 || v.fract().abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
