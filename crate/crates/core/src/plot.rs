//! Static SVG rendering of a coefficient path.

use std::fmt::Write;

use crate::selector::PathResult;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

const COLORS: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One `<path>` per penalized term, grid points evenly spaced with λ
/// decreasing left to right, and a dashed zero line.
pub fn path_svg(path: &PathResult) -> String {
    let terms: Vec<usize> = (0..path.labels.len()).filter(|&j| path.penalized[j]).collect();
    let g = path.grid.len();
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for row in &path.coefficients {
        for &j in &terms {
            lo = lo.min(row[j]);
            hi = hi.max(row[j]);
        }
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x = |k: usize| {
        if g <= 1 {
            MARGIN_L + plot_w / 2.0
        } else {
            MARGIN_L + plot_w * k as f64 / (g - 1) as f64
        }
    };
    let y = |v: f64| MARGIN_T + plot_h * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    let y0 = y(0.0);
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_L}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        MARGIN_L + plot_w
    );
    // Axis ticks: a handful of grid positions and the value range.
    let ticks = if g <= 1 { vec![0] } else { (0..5).map(|t| t * (g - 1) / 4).collect() };
    for k in ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#,
            x(k),
            HEIGHT - MARGIN_B + 16.0,
            path.grid[k]
        );
    }
    for v in [lo, 0.0, hi] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            MARGIN_L - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">lambda (decreasing)</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">coefficient (scaled)</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );

    for (c, &j) in terms.iter().enumerate() {
        let color = COLORS[c % COLORS.len()];
        let mut d = String::new();
        for (k, row) in path.coefficients.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, x(k), y(row[j]));
        }
        let label = escape(&path.labels[j]);
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"><title>{label}</title></path>"#,
            d.trim_end()
        );
        let ly = MARGIN_T + 14.0 + 18.0 * c as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{label}</text>"#, lx + 24.0);
    }
    s.push_str("</svg>\n");
    s
}
