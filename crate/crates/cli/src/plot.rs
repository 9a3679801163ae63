//! Static SVG scatter of a sweep: relative complexity on x, relative accuracy on y.

use std::fmt::Write;

use dyce_core::io::FrontierRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad, hi + pad)
}

pub fn render(entries: &[FrontierRow], pareto: &[FrontierRow]) -> String {
    let (c_lo, c_hi) = bounds(entries.iter().map(|r| r.complexity));
    let (a_lo, a_hi) = bounds(entries.iter().map(|r| r.accuracy));
    let x = |c: f64| MARGIN + (c - c_lo) / (c_hi - c_lo) * (WIDTH - 2.0 * MARGIN);
    let y = |a: f64| HEIGHT - MARGIN - (a - a_lo) / (a_hi - a_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let c = c_lo + f * (c_hi - c_lo);
        let a = a_lo + f * (a_hi - a_lo);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{c:.3}</text>"#,
            x(c),
            y0 + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{a:.3}</text>"#,
            x0 - 6.0,
            y(a) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">relative complexity C</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">relative accuracy A</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for r in entries {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#9e9e9e"><title>lambda={}</title></circle>"##,
            x(r.complexity),
            y(r.accuracy),
            r.lambda
        );
    }
    if !pareto.is_empty() {
        let points: Vec<String> = pareto
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.complexity), y(r.accuracy)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#1565c0" stroke-width="2"/>"##,
            points.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}
