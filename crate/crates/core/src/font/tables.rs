//! Table directory and the small fixed-layout tables.

use std::collections::BTreeMap;

use super::reader::Reader;
use super::{AxisDescriptor, FontError, GlyphId, ParseWarning, Tag};

const DIR_TAG: Tag = Tag::new(b"sfnt");

#[derive(Clone, Copy, Debug)]
pub(crate) struct TableRecord {
    pub tag: Tag,
    pub checksum: u32,
    pub offset: usize,
    pub length: usize,
}

pub(crate) struct TableDirectory {
    records: Vec<TableRecord>,
}

impl TableDirectory {
    pub fn parse(bytes: &[u8]) -> Result<TableDirectory, FontError> {
        let mut r = Reader::new(bytes, DIR_TAG, 0);
        let version = r.u32()?;
        match version {
            0x0001_0000 | 0x7472_7565 => {}
            0x4F54_544F => {
                return Err(FontError::UnsupportedOutlineFormat("CFF outlines".into()));
            }
            0x7474_6366 => {
                return Err(FontError::UnsupportedOutlineFormat("font collections".into()));
            }
            _ => return Err(r.malformed(0, format!("unknown sfnt version {version:#010x}"))),
        }
        let num_tables = r.u16()? as usize;
        r.skip(6)?;
        let mut records = Vec::with_capacity(num_tables);
        for _ in 0..num_tables {
            let tag = r.tag4()?;
            let checksum = r.u32()?;
            let offset = r.u32()? as usize;
            let length = r.u32()? as usize;
            let end = offset.checked_add(length);
            if end.is_none_or(|e| e > bytes.len()) {
                return Err(FontError::Malformed {
                    table: tag,
                    offset,
                    reason: format!("table extends past end of file ({length} bytes)"),
                });
            }
            records.push(TableRecord { tag, checksum, offset, length });
        }
        Ok(TableDirectory { records })
    }

    pub fn get(&self, tag: Tag) -> Option<TableRecord> {
        self.records.iter().find(|r| r.tag == tag).copied()
    }

    /// Returns a reader over a required table after validating its checksum.
    pub fn require<'a>(&self, bytes: &'a [u8], tag: Tag) -> Result<Reader<'a>, FontError> {
        let rec = self.get(tag).ok_or(FontError::MissingTable(tag))?;
        let data = &bytes[rec.offset..rec.offset + rec.length];
        let actual = table_checksum(data, tag == Tag::new(b"head"));
        if actual != rec.checksum {
            return Err(FontError::Malformed {
                table: tag,
                offset: rec.offset,
                reason: format!(
                    "checksum mismatch: stored {:#010x}, computed {actual:#010x}",
                    rec.checksum
                ),
            });
        }
        Ok(Reader::new(data, tag, rec.offset))
    }
}

/// Sum of big-endian u32 words, zero padded. For `head` the adjustment field
/// is excluded.
pub(crate) fn table_checksum(data: &[u8], is_head: bool) -> u32 {
    let mut sum = 0u32;
    for (i, chunk) in data.chunks(4).enumerate() {
        if is_head && i == 2 {
            continue;
        }
        let mut w = [0u8; 4];
        w[..chunk.len()].copy_from_slice(chunk);
        sum = sum.wrapping_add(u32::from_be_bytes(w));
    }
    sum
}

pub(crate) struct Head {
    pub units_per_em: u16,
    pub long_loca: bool,
}

impl Head {
    pub fn parse(r: Reader<'_>) -> Result<Head, FontError> {
        let mut h = r.at(18)?;
        let units_per_em = h.u16()?;
        if !(16..=16384).contains(&units_per_em) {
            return Err(r.malformed(18, format!("unitsPerEm {units_per_em} out of range")));
        }
        let mut l = r.at(50)?;
        let long_loca = match l.i16()? {
            0 => false,
            1 => true,
            v => return Err(r.malformed(50, format!("indexToLocFormat {v}"))),
        };
        Ok(Head { units_per_em, long_loca })
    }
}

pub(crate) fn parse_maxp(r: Reader<'_>) -> Result<u16, FontError> {
    r.at(4)?.u16()
}

pub(crate) fn parse_hhea(r: Reader<'_>) -> Result<u16, FontError> {
    let n = r.at(34)?.u16()?;
    if n == 0 {
        return Err(r.malformed(34, "numberOfHMetrics is zero"));
    }
    Ok(n)
}

pub(crate) struct Hmtx {
    advances: Vec<u16>,
    lsbs: Vec<i16>,
}

impl Hmtx {
    pub fn parse(r: Reader<'_>, num_h_metrics: u16, num_glyphs: u16) -> Result<Hmtx, FontError> {
        let mut rd = r;
        let n = num_h_metrics.min(num_glyphs.max(1)) as usize;
        let mut advances = Vec::with_capacity(n);
        let mut lsbs = Vec::with_capacity(num_glyphs as usize);
        for _ in 0..n {
            advances.push(rd.u16()?);
            lsbs.push(rd.i16()?);
        }
        for _ in n..num_glyphs as usize {
            lsbs.push(rd.i16()?);
        }
        Ok(Hmtx { advances, lsbs })
    }

    /// (advance width, left side bearing); trailing glyphs repeat the last advance.
    pub fn metrics(&self, gid: usize) -> (u16, i16) {
        let adv = *self.advances.get(gid).or(self.advances.last()).unwrap_or(&0);
        let lsb = self.lsbs.get(gid).copied().unwrap_or(0);
        (adv, lsb)
    }
}

pub(crate) fn parse_loca(r: Reader<'_>, num_glyphs: u16, long: bool) -> Result<Vec<usize>, FontError> {
    let mut rd = r;
    let mut out = Vec::with_capacity(num_glyphs as usize + 1);
    for i in 0..=num_glyphs as usize {
        let v = if long { rd.u32()? as usize } else { rd.u16()? as usize * 2 };
        if let Some(&prev) = out.last() {
            if v < prev {
                return Err(r.malformed(i * if long { 4 } else { 2 }, "loca offsets decrease"));
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Reads the best Unicode subtable (format 12 preferred over format 4).
pub(crate) fn parse_cmap(r: Reader<'_>) -> Result<BTreeMap<u32, GlyphId>, FontError> {
    let mut h = r;
    let _version = h.u16()?;
    let count = h.u16()? as usize;
    let mut best: Option<(u8, usize)> = None;
    for _ in 0..count {
        let platform = h.u16()?;
        let encoding = h.u16()?;
        let offset = h.u32()? as usize;
        let mut fr = r.at(offset)?;
        let format = fr.u16()?;
        let unicode = platform == 0 || (platform == 3 && (encoding == 1 || encoding == 10));
        if !unicode {
            continue;
        }
        let rank = match format {
            12 => 2,
            4 => 1,
            _ => continue,
        };
        if best.is_none_or(|(b, _)| rank > b) {
            best = Some((rank, offset));
        }
    }
    let mut map = BTreeMap::new();
    let Some((rank, offset)) = best else {
        return Ok(map);
    };
    if rank == 2 {
        let mut s = r.at(offset)?;
        s.skip(12)?;
        let groups = s.u32()?;
        for _ in 0..groups {
            let start = s.u32()?;
            let end = s.u32()?;
            let gid = s.u32()?;
            if end < start || end > 0x10FFFF {
                return Err(r.malformed(s.pos() - 12, "bad format 12 group"));
            }
            for (k, c) in (start..=end).enumerate() {
                let g = gid + k as u32;
                if g != 0 && g <= u16::MAX as u32 {
                    map.insert(c, GlyphId(g as u16));
                }
            }
        }
    } else {
        let mut s = r.at(offset)?;
        s.skip(6)?;
        let seg_x2 = s.u16()? as usize;
        let segs = seg_x2 / 2;
        let ends_at = offset + 14;
        let starts_at = ends_at + seg_x2 + 2;
        let deltas_at = starts_at + seg_x2;
        let ranges_at = deltas_at + seg_x2;
        for i in 0..segs {
            let end = r.at(ends_at + 2 * i)?.u16()?;
            let start = r.at(starts_at + 2 * i)?.u16()?;
            let delta = r.at(deltas_at + 2 * i)?.i16()?;
            let range_pos = ranges_at + 2 * i;
            let range = r.at(range_pos)?.u16()? as usize;
            if start > end {
                return Err(r.malformed(starts_at + 2 * i, "format 4 segment start after end"));
            }
            for c in start..=end {
                if c == 0xFFFF {
                    break;
                }
                let g = if range == 0 {
                    (c as i32 + delta as i32) as u16
                } else {
                    let at = range_pos + range + 2 * (c - start) as usize;
                    match r.at(at)?.u16()? {
                        0 => 0,
                        g => (g as i32 + delta as i32) as u16,
                    }
                };
                if g != 0 {
                    map.insert(c as u32, GlyphId(g));
                }
            }
        }
    }
    Ok(map)
}

pub(crate) struct FvarAxis {
    pub tag: Tag,
    pub min: f64,
    pub default: f64,
    pub max: f64,
}

pub(crate) fn parse_fvar(r: Reader<'_>) -> Result<Vec<FvarAxis>, FontError> {
    let mut h = r;
    let major = h.u16()?;
    if major != 1 {
        return Err(r.malformed(0, format!("fvar version {major}")));
    }
    h.skip(2)?;
    let axes_offset = h.u16()? as usize;
    h.skip(2)?;
    let count = h.u16()? as usize;
    let size = h.u16()? as usize;
    if size < 20 {
        return Err(r.malformed(10, format!("axis record size {size}")));
    }
    let mut axes = Vec::with_capacity(count);
    for i in 0..count {
        let at = axes_offset + i * size;
        let mut a = r.sub(at, size)?;
        let tag = a.tag4()?;
        let min = a.fixed()?;
        let default = a.fixed()?;
        let max = a.fixed()?;
        if !(min <= default && default <= max) {
            return Err(r.malformed(at, format!("axis '{tag}' has min > default or default > max")));
        }
        axes.push(FvarAxis { tag, min, default, max });
    }
    Ok(axes)
}

pub(crate) fn parse_avar(r: Reader<'_>, axis_count: usize) -> Result<Vec<Vec<(f64, f64)>>, FontError> {
    let mut h = r;
    let major = h.u16()?;
    let _minor = h.u16()?;
    if major != 1 && major != 2 {
        return Err(r.malformed(0, format!("avar version {major}")));
    }
    h.skip(2)?;
    let count = h.u16()? as usize;
    if count != axis_count {
        return Err(r.malformed(6, format!("avar has {count} maps for {axis_count} axes")));
    }
    let mut maps = Vec::with_capacity(count);
    for _ in 0..count {
        let n = h.u16()? as usize;
        let mut m = Vec::with_capacity(n);
        for _ in 0..n {
            let from = h.f2dot14()?;
            let to = h.f2dot14()?;
            m.push((from, to));
        }
        maps.push(m);
    }
    Ok(maps)
}

pub(crate) fn combine_axes(
    fvar: Vec<FvarAxis>,
    avar: Option<Vec<Vec<(f64, f64)>>>,
    warnings: &mut Vec<ParseWarning>,
) -> Vec<AxisDescriptor> {
    let mut maps = avar.unwrap_or_default();
    maps.resize(fvar.len(), Vec::new());
    fvar.into_iter()
        .zip(maps)
        .map(|(a, map)| {
            let map = if map.is_empty() || valid_avar(&map) {
                map
            } else {
                warnings.push(ParseWarning::InvalidAvarMap { axis: a.tag });
                Vec::new()
            };
            AxisDescriptor { tag: a.tag, min: a.min, default: a.default, max: a.max, avar_map: map }
        })
        .collect()
}

/// A usable segment map has the -1, 0, 1 anchors and increasing `from` values.
fn valid_avar(map: &[(f64, f64)]) -> bool {
    let has = |v: f64| map.iter().any(|&(f, t)| f == v && t == v);
    has(-1.0) && has(0.0) && has(1.0) && map.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_pads_and_skips_head_adjustment() {
        assert_eq!(table_checksum(&[0, 0, 0, 1, 0, 0, 0, 2, 1], false), 3 + 0x0100_0000);
        let head = [0, 0, 0, 1, 0, 0, 0, 2, 0xFF, 0xFF, 0xFF, 0xFF];
        assert_eq!(table_checksum(&head, true), 3);
    }

    #[test]
    fn avar_validation() {
        assert!(valid_avar(&[(-1.0, -1.0), (0.0, 0.0), (0.5, 0.4), (1.0, 1.0)]));
        assert!(!valid_avar(&[(-1.0, -1.0), (1.0, 1.0)]));
        assert!(!valid_avar(&[(-1.0, -1.0), (0.0, 0.0), (0.5, 0.6), (0.4, 0.7), (1.0, 1.0)]));
    }
}
