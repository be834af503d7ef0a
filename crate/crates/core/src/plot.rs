//! Minimal self-contained SVG line plots.

use std::fmt::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series as markers joined by polylines on shared linear axes.
/// Non-finite points are dropped.
pub fn render_svg(series: &[Series], title: &str, x_label: &str, y_label: &str) -> Result<String> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(Error::Empty("plot series"));
    }
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), (x, y)| (a.min(*x), b.max(*x), c.min(*y), d.max(*y)),
    );
    if x1 - x0 == 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 == 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (bx, by) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{bx:.2},{:.2} L{bx:.2},{by:.2} L{:.2},{by:.2}" fill="none" stroke="black"/>"#,
        MARGIN,
        WIDTH - MARGIN
    );
    for (v, anchor_x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{v:.4}</text>"#,
            by + 16.0
        );
    }
    for (v, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{anchor_y:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.4}</text>"#,
            bx - 6.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        if coords.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
        }
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * i as f64,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let svg = render_svg(&[Series::new("a", vec![(0.0, 1.0), (1.0, 2.0)])], "t", "x", "y").unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic_and_escaped() {
        let s = vec![Series::new("R<s>", vec![(1.25, 3.0), (2.0, 1.0), (4.0, 2.5)])];
        let a = render_svg(&s, "a & b", "s", "R").unwrap();
        assert_eq!(a, render_svg(&s, "a & b", "s", "R").unwrap());
        assert!(a.contains("R&lt;s&gt;") && a.contains("a &amp; b"));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(render_svg(&[], "t", "x", "y").is_err());
        assert!(render_svg(&[Series::new("a", vec![(f64::NAN, 1.0)])], "t", "x", "y").is_err());
        assert!(render_svg(&[Series::new("a", vec![(1.0, 1.0)])], "t", "x", "y").is_ok());
    }
}
