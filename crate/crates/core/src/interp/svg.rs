//! SVG export of word layouts.

use std::fmt::Write as _;

use super::{Curves, WordLayout};
use crate::geom::Point;

#[derive(Clone, Debug)]
pub struct SvgOptions {
    /// Padding around the outline bounds, as a fraction of units per em.
    pub padding: f64,
    pub fill: String,
    pub units_per_em: f64,
}

impl SvgOptions {
    pub fn new(units_per_em: u16) -> SvgOptions {
        SvgOptions { padding: 0.05, fill: "black".into(), units_per_em: units_per_em as f64 }
    }
}

/// Formats with at most 4 decimals, trailing zeros removed, no negative zero.
pub fn format_number(v: f64) -> String {
    let mut s = format!("{v:.4}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn pt(out: &mut String, p: Point) {
    let _ = write!(out, "{} {}", format_number(p.x), format_number(p.y));
}

/// One `<path>` per glyph in glyph-local coordinates, flipped to y-down and
/// translated by the glyph's layout offset.
pub fn export_svg(layout: &WordLayout, options: &SvgOptions) -> String {
    let pad = options.padding * options.units_per_em;
    let (min, max) = match layout.outline_bounds() {
        Some(b) => (b.min, b.max),
        None => (Point::ZERO, Point::new(layout.advance(), options.units_per_em)),
    };
    let (x0, y0) = (min.x - pad, -max.y - pad);
    let (w, h) = (max.x - min.x + 2.0 * pad, max.y - min.y + 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        format_number(x0),
        format_number(y0),
        format_number(w),
        format_number(h)
    );
    for (j, inst) in layout.instances.iter().enumerate() {
        let mut d = String::new();
        for c in &inst.contours {
            let segs = c.segment_count();
            if segs == 0 {
                continue;
            }
            let first = c.start;
            if !d.is_empty() {
                d.push(' ');
            }
            d.push('M');
            pt(&mut d, inst.points()[first]);
            for s in 0..segs {
                let idx = |k: usize| {
                    if c.closed {
                        c.start + (3 * s + k) % c.count
                    } else {
                        c.start + 3 * s + k
                    }
                };
                d.push_str(" C");
                for k in 1..=3 {
                    if k > 1 {
                        d.push(' ');
                    }
                    pt(&mut d, inst.points()[idx(k)]);
                }
            }
            if c.closed {
                d.push_str(" Z");
            }
        }
        let _ = writeln!(
            out,
            "  <path transform=\"matrix(1 0 0 -1 {} 0)\" fill=\"{}\" d=\"{}\"/>",
            format_number(layout.offsets[j].x),
            options.fill,
            d
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-0.00001), "0");
        assert_eq!(format_number(2.50001), "2.5");
        assert_eq!(format_number(-12.34567), "-12.3457");
    }
}
