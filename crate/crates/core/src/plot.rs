//! Standalone SVG line plots and gnuplot data files for `(x, y)` curves.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Reads a two-column numeric CSV. A first line that does not parse is taken
/// as a header; blank lines are skipped.
pub fn parse_curve(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::MalformedCurve {
            line: k + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() < 2 {
            return Err(bad("expected at least two columns"));
        }
        match (f[0].parse::<f64>(), f[1].parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => pts.push((x, y)),
            (Ok(_), Ok(_)) => return Err(bad("non-finite value")),
            _ if pts.is_empty() && k == 0 => continue,
            _ => return Err(bad("non-numeric value")),
        }
    }
    Ok(pts)
}

/// Whitespace-separated `x y` lines for gnuplot.
pub fn to_gnuplot(points: &[(f64, f64)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let mut s = String::new();
    for (x, y) in points {
        let _ = writeln!(s, "{x} {y}");
    }
    Ok(s)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders one polyline with axes and min/max tick labels.
pub fn render_svg(
    points: &[(f64, f64)],
    title: &str,
    xlabel: &str,
    ylabel: &str,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let (x0, x1) = span(points.iter().map(|p| p.0));
    let (y0, y1) = span(points.iter().map(|p| p.1));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let esc = |s: &str| {
        s.replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        W / 2.0,
        esc(title)
    );
    let (left, right, top, bottom) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for (x, anchor, v) in [(left, "start", x0), (right, "end", x1)] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{v:.3}</text>"#,
            bottom + 15.0
        );
    }
    for (y, v) in [(bottom, y0), (top + 4.0, y1)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.3}</text>"#,
            left - 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        W / 2.0,
        H - 10.0,
        esc(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})" font-family="sans-serif" font-size="12">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        coords.join(" ")
    );
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_is_an_error() {
        assert!(matches!(
            render_svg(&[], "", "", ""),
            Err(Error::EmptyCurve)
        ));
        assert!(matches!(to_gnuplot(&[]), Err(Error::EmptyCurve)));
    }

    #[test]
    fn two_points_one_polyline() {
        let svg = render_svg(&[(0.0, 0.1), (1.0, 0.9)], "k", "C", "kappa").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(
            svg,
            render_svg(&[(0.0, 0.1), (1.0, 0.9)], "k", "C", "kappa").unwrap()
        );
    }

    #[test]
    fn constant_series_renders() {
        let svg = render_svg(&[(0.5, 0.5)], "a<b", "", "").unwrap();
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn curve_parsing() {
        assert_eq!(
            parse_curve("C,Q\n0,0.5\n\n1,0.25\n").unwrap(),
            vec![(0.0, 0.5), (1.0, 0.25)]
        );
        assert_eq!(parse_curve("0,1,extra\n").unwrap(), vec![(0.0, 1.0)]);
        assert!(matches!(
            parse_curve("C,Q\n0,x\n"),
            Err(Error::MalformedCurve { line: 2, .. })
        ));
        assert!(parse_curve("0\n").is_err());
        assert!(parse_curve("0,inf\n").is_err());
        assert_eq!(to_gnuplot(&[(0.0, 0.5)]).unwrap(), "0 0.5\n");
    }
}
