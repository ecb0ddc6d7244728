//! Glyph variation table and tuple variation stores.

use super::reader::Reader;
use super::{FontError, Region, Tag, Tent};
use crate::geom::Point;

const SHARED_POINT_NUMBERS: u16 = 0x8000;
const COUNT_MASK: u16 = 0x0FFF;
const EMBEDDED_PEAK_TUPLE: u16 = 0x8000;
const INTERMEDIATE_REGION: u16 = 0x4000;
const PRIVATE_POINT_NUMBERS: u16 = 0x2000;
const TUPLE_INDEX_MASK: u16 = 0x0FFF;

const POINTS_ARE_WORDS: u8 = 0x80;
const POINT_RUN_COUNT_MASK: u8 = 0x7F;
const DELTAS_ARE_ZERO: u8 = 0x80;
const DELTAS_ARE_WORDS: u8 = 0x40;
const DELTA_RUN_COUNT_MASK: u8 = 0x3F;

/// Explicit deltas of one tuple, sorted by point index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseDeltas(pub Vec<(usize, Point)>);

impl SparseDeltas {
    pub fn is_dense(&self, point_count: usize) -> bool {
        self.0.len() == point_count
    }
}

/// One decoded tuple: where it applies and what it moves.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleVariation {
    pub region: Region,
    pub deltas: SparseDeltas,
    /// Some axis had a peak outside [-1, 1]; that axis was ignored.
    pub had_invalid_peak: bool,
}

pub(crate) struct GvarTable<'a> {
    table: Reader<'a>,
    axis_count: usize,
    shared: Vec<Vec<f64>>,
    data_offset: usize,
    offsets: Vec<usize>,
}

impl<'a> GvarTable<'a> {
    pub fn parse(r: Reader<'a>, axis_count: usize) -> Result<GvarTable<'a>, FontError> {
        let mut h = r;
        let major = h.u16()?;
        if major != 1 {
            return Err(r.malformed(0, format!("gvar version {major}")));
        }
        h.skip(2)?;
        let axes = h.u16()? as usize;
        if axes != axis_count {
            return Err(r.malformed(4, format!("gvar has {axes} axes, fvar has {axis_count}")));
        }
        let shared_count = h.u16()? as usize;
        let shared_offset = h.u32()? as usize;
        let glyph_count = h.u16()? as usize;
        let flags = h.u16()?;
        let data_offset = h.u32()? as usize;
        let long = flags & 1 != 0;
        let mut offsets = Vec::with_capacity(glyph_count + 1);
        for _ in 0..=glyph_count {
            offsets.push(if long { h.u32()? as usize } else { h.u16()? as usize * 2 });
        }
        if offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(r.malformed(20, "glyph variation offsets decrease"));
        }
        let mut s = r.at(shared_offset)?;
        let mut shared = Vec::with_capacity(shared_count);
        for _ in 0..shared_count {
            let mut t = Vec::with_capacity(axis_count);
            for _ in 0..axis_count {
                t.push(s.f2dot14()?);
            }
            shared.push(t);
        }
        Ok(GvarTable { table: r, axis_count, shared, data_offset, offsets })
    }

    pub fn glyph_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Tuples for glyph `gid`; `point_count` includes the four phantoms.
    pub fn glyph_tuples(&self, gid: usize, point_count: usize) -> Result<Vec<TupleVariation>, FontError> {
        let start = self.offsets[gid];
        let end = self.offsets[gid + 1];
        if start == end {
            return Ok(Vec::new());
        }
        let sub = self.table.sub(self.data_offset + start, end - start)?;
        unpack_store(sub, &self.shared, self.axis_count, point_count)
    }
}

/// Decodes a complete tuple variation store into regions and sparse deltas.
///
/// `point_count` is the number of points the deltas address, phantoms
/// included. Returns deltas only for explicitly referenced points.
pub fn unpack_tuple_store(
    data: &[u8],
    shared_tuples: &[Vec<f64>],
    axis_count: usize,
    point_count: usize,
) -> Result<Vec<TupleVariation>, FontError> {
    unpack_store(Reader::new(data, Tag::new(b"gvar"), 0), shared_tuples, axis_count, point_count)
}

fn unpack_store(
    r: Reader<'_>,
    shared: &[Vec<f64>],
    axis_count: usize,
    point_count: usize,
) -> Result<Vec<TupleVariation>, FontError> {
    let mut h = r;
    let header = h.u16()?;
    let count = (header & COUNT_MASK) as usize;
    let data_offset = h.u16()? as usize;
    let mut data = r.at(data_offset)?;
    let shared_points = if header & SHARED_POINT_NUMBERS != 0 {
        Some(read_points(&mut data, point_count)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let hdr_at = h.pos();
        let size = h.u16()? as usize;
        let index = h.u16()?;
        let peak: Vec<f64> = if index & EMBEDDED_PEAK_TUPLE != 0 {
            (0..axis_count).map(|_| h.f2dot14()).collect::<Result<_, _>>()?
        } else {
            let i = (index & TUPLE_INDEX_MASK) as usize;
            shared
                .get(i)
                .cloned()
                .ok_or_else(|| r.malformed(hdr_at + 2, format!("shared tuple {i} out of range")))?
        };
        let inter = if index & INTERMEDIATE_REGION != 0 {
            let s: Vec<f64> = (0..axis_count).map(|_| h.f2dot14()).collect::<Result<_, _>>()?;
            let e: Vec<f64> = (0..axis_count).map(|_| h.f2dot14()).collect::<Result<_, _>>()?;
            Some((s, e))
        } else {
            None
        };
        let body_at = data.pos();
        let mut body = data.sub(body_at, size)?;
        data.skip(size)?;
        let points = if index & PRIVATE_POINT_NUMBERS != 0 {
            read_points(&mut body, point_count)?
        } else {
            shared_points
                .clone()
                .ok_or_else(|| r.malformed(hdr_at, "tuple uses shared points but none are present"))?
        };
        let xs = read_deltas(&mut body, points.len())?;
        let ys = read_deltas(&mut body, points.len())?;
        let mut dense: Vec<Option<Point>> = vec![None; point_count];
        for (k, &p) in points.iter().enumerate() {
            if p < point_count {
                dense[p] = Some(Point::new(xs[k], ys[k]));
            }
        }
        let deltas = SparseDeltas(
            dense.into_iter().enumerate().filter_map(|(i, d)| d.map(|d| (i, d))).collect(),
        );
        let (region, had_invalid_peak) = build_region(&peak, inter.as_ref());
        out.push(TupleVariation { region, deltas, had_invalid_peak });
    }
    Ok(out)
}

/// Builds a region, dropping axes whose triple cannot vary the scalar.
fn build_region(peak: &[f64], inter: Option<&(Vec<f64>, Vec<f64>)>) -> (Region, bool) {
    let mut tents = Vec::new();
    let mut invalid = false;
    for (a, &p) in peak.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        if !(-1.0..=1.0).contains(&p) {
            invalid = true;
            continue;
        }
        let (s, e) = match inter {
            Some((s, e)) => (s[a], e[a]),
            None => (p.min(0.0), p.max(0.0)),
        };
        if s > p || p > e || (s < 0.0 && e > 0.0) {
            continue;
        }
        tents.push((a, Tent::new(s.max(-1.0), p, e.min(1.0))));
    }
    (Region::new(tents), invalid)
}

/// Packed point numbers. An empty list in the file means every point.
fn read_points(r: &mut Reader<'_>, point_count: usize) -> Result<Vec<usize>, FontError> {
    let first = r.u8()? as usize;
    let count = if first & 0x80 != 0 {
        ((first & 0x7F) << 8) | r.u8()? as usize
    } else {
        first
    };
    if count == 0 {
        return Ok((0..point_count).collect());
    }
    let mut out = Vec::with_capacity(count);
    let mut acc = 0usize;
    while out.len() < count {
        let ctrl = r.u8()?;
        let run = (ctrl & POINT_RUN_COUNT_MASK) as usize + 1;
        for _ in 0..run.min(count - out.len()) {
            let d = if ctrl & POINTS_ARE_WORDS != 0 { r.u16()? as usize } else { r.u8()? as usize };
            acc += d;
            out.push(acc);
        }
    }
    Ok(out)
}

fn read_deltas(r: &mut Reader<'_>, count: usize) -> Result<Vec<f64>, FontError> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let at = r.pos();
        let ctrl = r.u8()?;
        let run = (ctrl & DELTA_RUN_COUNT_MASK) as usize + 1;
        if out.len() + run > count {
            return Err(r.malformed(at, "delta run exceeds point count"));
        }
        for _ in 0..run {
            let v = match ctrl & (DELTAS_ARE_ZERO | DELTAS_ARE_WORDS) {
                DELTAS_ARE_ZERO => 0.0,
                DELTAS_ARE_WORDS => r.i16()? as f64,
                0 => r.i8()? as f64,
                _ => r.i32()? as f64,
            };
            out.push(v);
        }
    }
    Ok(out)
}
