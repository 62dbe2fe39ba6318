//! Minimal static SVG plots (scatter and polyline, optional log axes).
//!
//! Charts are SVG 1.1 with no external dependencies. Assertions never run
//! against SVG bytes; every plot ships with a sibling CSV holding the
//! plotted numbers.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Connect points with a line instead of drawing markers.
    pub line: bool,
}

pub fn xy_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
    log_x: bool,
    log_y: bool,
) -> String {
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            let (x, y) = (tx(x), ty(y));
            if x.is_finite() && y.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).abs().max(1e-12);
        *lo -= 0.05 * span;
        *hi += 0.05 * span;
    };
    pad(&mut x_min, &mut x_max);
    pad(&mut y_min, &mut y_max);

    let px = |x: f64| MARGIN_L + (tx(x) - x_min) / (x_max - x_min) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| {
        HEIGHT - MARGIN_B - (ty(y) - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = write!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // frame
    let _ = write!(
        svg,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{:.1}" height="{:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );

    // ticks: five per axis in transformed space
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let xpix = MARGIN_L + f * (WIDTH - MARGIN_L - MARGIN_R);
        let ypix = HEIGHT - MARGIN_B - f * (HEIGHT - MARGIN_T - MARGIN_B);
        let x_shown = if log_x { 10f64.powf(xv) } else { xv };
        let y_shown = if log_y { 10f64.powf(yv) } else { yv };
        let _ = write!(
            svg,
            r##"<line x1="{xpix:.1}" y1="{:.1}" x2="{xpix:.1}" y2="{:.1}" stroke="#333"/>"##,
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = write!(
            svg,
            r#"<text x="{xpix:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 17.0,
            fmt_tick(x_shown)
        );
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{ypix:.1}" x2="{MARGIN_L}" y2="{ypix:.1}" stroke="#333"/>"##,
            MARGIN_L - 5.0
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN_L - 8.0,
            ypix + 3.0,
            fmt_tick(y_shown)
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        escape(y_label)
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if s.line {
            let mut d = String::new();
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if i == 0 { "M" } else { " L" },
                    px(x),
                    py(y)
                );
            }
            let _ = write!(
                svg,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
        } else {
            for &(x, y) in &s.points {
                let _ = write!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.75"/>"#,
                    px(x),
                    py(y)
                );
            }
        }
        // legend entry
        let ly = MARGIN_T + 14.0 + 16.0 * si as f64;
        let _ = write!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
            MARGIN_L + 8.0,
            ly - 9.0
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN_L + 22.0,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
