//! TrueType glyph records.

use super::reader::Reader;
use super::FontError;
use crate::geom::Point;

const ON_CURVE: u8 = 0x01;
const X_SHORT: u8 = 0x02;
const Y_SHORT: u8 = 0x04;
const REPEAT: u8 = 0x08;
const X_SAME_OR_POSITIVE: u8 = 0x10;
const Y_SAME_OR_POSITIVE: u8 = 0x20;

const ARG_1_AND_2_ARE_WORDS: u16 = 0x0001;
const ARGS_ARE_XY_VALUES: u16 = 0x0002;
const WE_HAVE_A_SCALE: u16 = 0x0008;
const MORE_COMPONENTS: u16 = 0x0020;
const WE_HAVE_AN_X_AND_Y_SCALE: u16 = 0x0040;
const WE_HAVE_A_TWO_BY_TWO: u16 = 0x0080;

/// One component reference of a composite glyph.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub glyph: u16,
    pub dx: f64,
    pub dy: f64,
    /// Row-major [xx, xy, yx, yy]; a point maps to (xx*x + yx*y, xy*x + yy*y).
    pub transform: [f64; 4],
    /// False when the component is positioned by point matching.
    pub xy_offset: bool,
}

impl Component {
    pub fn apply(&self, p: Point) -> Point {
        let [a, b, c, d] = self.transform;
        Point::new(a * p.x + c * p.y, b * p.x + d * p.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawOutline {
    Empty,
    Simple {
        points: Vec<Point>,
        on_curve: Vec<bool>,
        /// Inclusive end index of each contour.
        contour_ends: Vec<usize>,
    },
    Composite {
        components: Vec<Component>,
    },
}

/// Decodes glyph `gid`, returning the outline and the header `xMin`.
pub(crate) fn parse_glyph(glyf: Reader<'_>, loca: &[usize], gid: usize) -> Result<(RawOutline, i16), FontError> {
    let start = loca[gid];
    let end = loca[gid + 1];
    if start == end {
        return Ok((RawOutline::Empty, 0));
    }
    let g = glyf.sub(start, end - start)?;
    let mut r = g;
    let contours = r.i16()?;
    let x_min = r.i16()?;
    r.skip(6)?;
    if contours >= 0 {
        Ok((parse_simple(g, r, contours as usize)?, x_min))
    } else {
        Ok((parse_composite(g, r, loca.len() - 1)?, x_min))
    }
}

fn parse_simple(g: Reader<'_>, mut r: Reader<'_>, contours: usize) -> Result<RawOutline, FontError> {
    let mut ends = Vec::with_capacity(contours);
    for _ in 0..contours {
        let e = r.u16()? as usize;
        if let Some(&prev) = ends.last() {
            if e <= prev {
                return Err(g.malformed(r.pos() - 2, "contour end points not increasing"));
            }
        }
        ends.push(e);
    }
    let n = ends.last().map_or(0, |&e| e + 1);
    let instr = r.u16()? as usize;
    r.skip(instr)?;
    let mut flags = Vec::with_capacity(n);
    while flags.len() < n {
        let f = r.u8()?;
        flags.push(f);
        if f & REPEAT != 0 {
            let count = r.u8()? as usize;
            if flags.len() + count > n {
                return Err(g.malformed(r.pos() - 1, "flag repeat runs past point count"));
            }
            flags.extend(std::iter::repeat_n(f, count));
        }
    }
    let read_coords = |r: &mut Reader<'_>, short: u8, same: u8| -> Result<Vec<f64>, FontError> {
        let mut v = Vec::with_capacity(n);
        let mut acc: i32 = 0;
        for &f in &flags {
            if f & short != 0 {
                let d = r.u8()? as i32;
                acc += if f & same != 0 { d } else { -d };
            } else if f & same == 0 {
                acc += r.i16()? as i32;
            }
            v.push(acc as f64);
        }
        Ok(v)
    };
    let xs = read_coords(&mut r, X_SHORT, X_SAME_OR_POSITIVE)?;
    let ys = read_coords(&mut r, Y_SHORT, Y_SAME_OR_POSITIVE)?;
    Ok(RawOutline::Simple {
        points: xs.into_iter().zip(ys).map(|(x, y)| Point::new(x, y)).collect(),
        on_curve: flags.iter().map(|f| f & ON_CURVE != 0).collect(),
        contour_ends: ends,
    })
}

fn parse_composite(g: Reader<'_>, mut r: Reader<'_>, num_glyphs: usize) -> Result<RawOutline, FontError> {
    let mut components = Vec::new();
    loop {
        let at = r.pos();
        let flags = r.u16()?;
        let glyph = r.u16()?;
        if glyph as usize >= num_glyphs {
            return Err(g.malformed(at + 2, format!("component glyph {glyph} out of range")));
        }
        let xy = flags & ARGS_ARE_XY_VALUES != 0;
        let (a1, a2) = match (flags & ARG_1_AND_2_ARE_WORDS != 0, xy) {
            (true, true) => (r.i16()? as f64, r.i16()? as f64),
            (true, false) => (r.u16()? as f64, r.u16()? as f64),
            (false, true) => (r.i8()? as f64, r.i8()? as f64),
            (false, false) => (r.u8()? as f64, r.u8()? as f64),
        };
        let transform = if flags & WE_HAVE_A_SCALE != 0 {
            let s = r.f2dot14()?;
            [s, 0.0, 0.0, s]
        } else if flags & WE_HAVE_AN_X_AND_Y_SCALE != 0 {
            let sx = r.f2dot14()?;
            let sy = r.f2dot14()?;
            [sx, 0.0, 0.0, sy]
        } else if flags & WE_HAVE_A_TWO_BY_TWO != 0 {
            [r.f2dot14()?, r.f2dot14()?, r.f2dot14()?, r.f2dot14()?]
        } else {
            [1.0, 0.0, 0.0, 1.0]
        };
        let (dx, dy) = if xy { (a1, a2) } else { (0.0, 0.0) };
        components.push(Component { glyph, dx, dy, transform, xy_offset: xy });
        if flags & MORE_COMPONENTS == 0 {
            break;
        }
    }
    Ok(RawOutline::Composite { components })
}
