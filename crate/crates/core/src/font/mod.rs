//! Binary variable-font decoding into a fully unpacked [`FontModel`].
//!
//! Only TrueType outlines are supported. Everything the interpolation
//! pipeline needs is made explicit at parse time: shared tuples are resolved,
//! packed point numbers are expanded, untouched points are inferred (IUP),
//! implied on-curve points are materialized, quadratic segments are elevated
//! to cubics, composite glyphs are flattened and contour orientation is
//! normalized.

mod assemble;
pub mod dump;
mod elevate;
mod glyf;
mod gvar;
mod iup;
mod reader;
mod tables;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::geom::Point;

pub use elevate::{elevate_outline, ElevationMap, QuadContour};
pub use glyf::{Component, RawOutline};
pub use gvar::{unpack_tuple_store, SparseDeltas, TupleVariation};
pub use iup::apply_iup;

/// Four-byte OpenType tag.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag(pub [u8; 4]);

impl Tag {
    pub const fn new(bytes: &[u8; 4]) -> Tag {
        Tag(*bytes)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            let c = if b.is_ascii_graphic() || b == b' ' { b as char } else { '?' };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tag({self})")
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Tag, String> {
        let bytes = s.as_bytes();
        if bytes.is_empty() || bytes.len() > 4 || !s.is_ascii() {
            return Err(format!("invalid tag {s:?}"));
        }
        let mut out = [b' '; 4];
        out[..bytes.len()].copy_from_slice(bytes);
        Ok(Tag(out))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FontError {
    #[error("unsupported outline format: {0}")]
    UnsupportedOutlineFormat(String),
    #[error("missing required table '{0}'")]
    MissingTable(Tag),
    #[error("malformed '{table}' table at byte {offset}: {reason}")]
    Malformed { table: Tag, offset: usize, reason: String },
}

impl FontError {
    pub fn table(&self) -> Option<Tag> {
        match self {
            FontError::MissingTable(t) => Some(*t),
            FontError::Malformed { table, .. } => Some(*table),
            FontError::UnsupportedOutlineFormat(_) => None,
        }
    }
}

/// Non-fatal problems found while unpacking.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseWarning {
    /// A contour with fewer than two points was dropped.
    DegenerateContour { glyph: GlyphId, contour: usize },
    /// Component uses point matching instead of an offset; placed at the origin.
    PointMatchedComponent { glyph: GlyphId, component: usize },
    /// Composite nesting deeper than the supported limit; the branch was dropped.
    CompositeTooDeep { glyph: GlyphId },
    /// An avar segment map violated the required anchors and was ignored.
    InvalidAvarMap { axis: Tag },
    /// A region triple with a peak outside [-1, 1] was ignored.
    InvalidRegion { glyph: GlyphId, tuple: usize },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::DegenerateContour { glyph, contour } => {
                write!(f, "glyph {}: contour {contour} has fewer than 2 points, dropped", glyph.0)
            }
            ParseWarning::PointMatchedComponent { glyph, component } => write!(
                f,
                "glyph {}: component {component} uses point matching, placed at origin",
                glyph.0
            ),
            ParseWarning::CompositeTooDeep { glyph } => {
                write!(f, "glyph {}: composite nesting too deep, branch dropped", glyph.0)
            }
            ParseWarning::InvalidAvarMap { axis } => {
                write!(f, "avar map for '{axis}' is invalid, ignored")
            }
            ParseWarning::InvalidRegion { glyph, tuple } => {
                write!(f, "glyph {}: tuple {tuple} has an out-of-range peak", glyph.0)
            }
        }
    }
}

/// Glyph index into the font's glyph array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlyphId(pub u16);

/// One design axis from `fvar`, with its `avar` segment map.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisDescriptor {
    pub tag: Tag,
    pub min: f64,
    pub default: f64,
    pub max: f64,
    /// (from, to) pairs in normalized coordinates; empty means identity.
    pub avar_map: Vec<(f64, f64)>,
}

/// Support of a delta set along one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tent {
    pub start: f64,
    pub peak: f64,
    pub end: f64,
}

impl Tent {
    pub const fn new(start: f64, peak: f64, end: f64) -> Tent {
        Tent { start, peak, end }
    }
}

/// Region of influence of one delta set. Axes without a tent contribute 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Region {
    /// (axis index, tent), sorted by axis index, peaks nonzero.
    pub tents: Vec<(usize, Tent)>,
}

impl Region {
    pub fn new(mut tents: Vec<(usize, Tent)>) -> Region {
        tents.retain(|(_, t)| t.peak != 0.0);
        tents.sort_by_key(|(a, _)| *a);
        Region { tents }
    }

    pub fn tent(&self, axis: usize) -> Option<Tent> {
        self.tents.iter().find(|(a, _)| *a == axis).map(|(_, t)| *t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contour {
    pub start: usize,
    pub count: usize,
    pub closed: bool,
}

impl Contour {
    /// Number of cubic segments in this contour.
    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.count / 3
        } else {
            self.count.saturating_sub(1) / 3
        }
    }
}

/// Flattened TrueType description of a glyph, before elevation.
///
/// The last two points are the horizontal phantom points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadraticSource {
    pub points: Vec<Point>,
    pub on_curve: Vec<bool>,
    /// Inclusive end index of each contour.
    pub contour_ends: Vec<usize>,
    /// One dense delta set per region, aligned with `points`.
    pub deltas: Vec<Vec<Point>>,
}

/// Cubic outline of one glyph with all its delta sets.
///
/// `default_points` holds the outline control points followed by the left and
/// right sidebearing phantom points. Within a closed contour of `3s` points,
/// segment `i` uses points `3i, 3i+1, 3i+2, 3i+3 (mod 3s)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GlyphVariation {
    pub default_points: Vec<Point>,
    pub contours: Vec<Contour>,
    pub deltas: Vec<Vec<Point>>,
    pub regions: Vec<Region>,
    pub source: QuadraticSource,
    /// Linear map from `source.points` to `default_points`.
    pub elevation: ElevationMap,
    segments: Vec<[usize; 4]>,
}

impl GlyphVariation {
    pub(crate) fn new(
        default_points: Vec<Point>,
        contours: Vec<Contour>,
        deltas: Vec<Vec<Point>>,
        regions: Vec<Region>,
        source: QuadraticSource,
        elevation: ElevationMap,
    ) -> GlyphVariation {
        let mut segments = Vec::new();
        for c in &contours {
            for i in 0..c.segment_count() {
                let idx = |j: usize| {
                    if c.closed {
                        c.start + (3 * i + j) % c.count
                    } else {
                        c.start + 3 * i + j
                    }
                };
                segments.push([idx(0), idx(1), idx(2), idx(3)]);
            }
        }
        GlyphVariation { default_points, contours, deltas, regions, source, elevation, segments }
    }

    /// Total number of points `k`, phantoms included.
    pub fn point_count(&self) -> usize {
        self.default_points.len()
    }

    /// Number of outline (non-phantom) points.
    pub fn outline_point_count(&self) -> usize {
        self.default_points.len() - 2
    }

    pub fn left_phantom_index(&self) -> usize {
        self.default_points.len() - 2
    }

    pub fn right_phantom_index(&self) -> usize {
        self.default_points.len() - 1
    }

    pub fn delta_set_count(&self) -> usize {
        self.deltas.len()
    }

    /// Point indices of every cubic segment, in contour order.
    pub fn segments(&self) -> &[[usize; 4]] {
        &self.segments
    }

    /// Contour index owning segment `s`.
    pub fn segment_contour(&self, s: usize) -> usize {
        let mut acc = 0;
        for (ci, c) in self.contours.iter().enumerate() {
            acc += c.segment_count();
            if s < acc {
                return ci;
            }
        }
        self.contours.len().saturating_sub(1)
    }
}

/// Undecoded per-glyph data as stored in `glyf`/`gvar`, with dense deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGlyph {
    pub outline: RawOutline,
    /// The four phantom points in gvar order.
    pub phantoms: [Point; 4],
    /// Tuples in file order; deltas are dense over outline points + 4 phantoms.
    pub tuples: Vec<(Region, Vec<Point>)>,
}

impl RawGlyph {
    /// Point count seen by gvar, excluding phantoms.
    pub fn gvar_point_count(&self) -> usize {
        match &self.outline {
            RawOutline::Empty => 0,
            RawOutline::Simple { points, .. } => points.len(),
            RawOutline::Composite { components } => components.len(),
        }
    }
}

/// A fully unpacked variable font.
#[derive(Clone, Debug, PartialEq)]
pub struct FontModel {
    pub units_per_em: u16,
    pub axes: Vec<AxisDescriptor>,
    pub glyphs: Vec<GlyphVariation>,
    pub char_map: BTreeMap<u32, GlyphId>,
    pub advance_widths: Vec<u16>,
    pub raw_glyphs: Vec<RawGlyph>,
    pub warnings: Vec<ParseWarning>,
}

impl FontModel {
    pub fn axis_count(&self) -> usize {
        self.axes.len()
    }

    pub fn glyph(&self, id: GlyphId) -> Option<&GlyphVariation> {
        self.glyphs.get(id.0 as usize)
    }

    pub fn glyph_for_char(&self, c: char) -> Option<GlyphId> {
        self.char_map.get(&(c as u32)).copied()
    }

    pub fn axis_index(&self, tag: Tag) -> Option<usize> {
        self.axes.iter().position(|a| a.tag == tag)
    }

    /// Maps text to glyph ids; missing code points are returned as the error.
    pub fn glyphs_for_text(&self, text: &str) -> Result<Vec<GlyphId>, Vec<u32>> {
        let mut ids = Vec::new();
        let mut missing = Vec::new();
        for c in text.chars() {
            match self.glyph_for_char(c) {
                Some(id) => ids.push(id),
                None => missing.push(c as u32),
            }
        }
        if missing.is_empty() {
            Ok(ids)
        } else {
            Err(missing)
        }
    }
}

/// Decodes a TrueType-flavored variable font.
pub fn parse_font(bytes: &[u8]) -> Result<FontModel, FontError> {
    let dir = tables::TableDirectory::parse(bytes)?;
    if dir.get(Tag::new(b"glyf")).is_none() {
        let what = if dir.get(Tag::new(b"CFF2")).is_some() {
            "CFF2 outlines"
        } else if dir.get(Tag::new(b"CFF ")).is_some() {
            "CFF outlines"
        } else {
            "no glyf table"
        };
        return Err(FontError::UnsupportedOutlineFormat(what.to_string()));
    }
    for tag in [b"fvar", b"gvar"] {
        if dir.get(Tag::new(tag)).is_none() {
            return Err(FontError::MissingTable(Tag::new(tag)));
        }
    }
    let head = tables::Head::parse(dir.require(bytes, Tag::new(b"head"))?)?;
    let maxp = tables::parse_maxp(dir.require(bytes, Tag::new(b"maxp"))?)?;
    let hhea = tables::parse_hhea(dir.require(bytes, Tag::new(b"hhea"))?)?;
    let hmtx = tables::Hmtx::parse(dir.require(bytes, Tag::new(b"hmtx"))?, hhea, maxp)?;
    let loca = tables::parse_loca(
        dir.require(bytes, Tag::new(b"loca"))?,
        maxp,
        head.long_loca,
    )?;
    let char_map = tables::parse_cmap(dir.require(bytes, Tag::new(b"cmap"))?)?;
    let mut warnings = Vec::new();
    let axes = {
        let fvar = tables::parse_fvar(dir.require(bytes, Tag::new(b"fvar"))?)?;
        let avar = match dir.get(Tag::new(b"avar")) {
            Some(_) => Some(tables::parse_avar(
                dir.require(bytes, Tag::new(b"avar"))?,
                fvar.len(),
            )?),
            None => None,
        };
        tables::combine_axes(fvar, avar, &mut warnings)
    };
    let glyf = dir.require(bytes, Tag::new(b"glyf"))?;
    let mut outlines = Vec::with_capacity(maxp as usize);
    for gid in 0..maxp as usize {
        outlines.push(glyf::parse_glyph(glyf, &loca, gid)?);
    }
    let gvar = gvar::GvarTable::parse(dir.require(bytes, Tag::new(b"gvar"))?, axes.len())?;
    if gvar.glyph_count() < maxp as usize {
        return Err(FontError::Malformed {
            table: Tag::new(b"gvar"),
            offset: 0,
            reason: format!("glyph count {} below maxp {}", gvar.glyph_count(), maxp),
        });
    }
    let mut raw_glyphs = Vec::with_capacity(outlines.len());
    for (gid, (outline, bbox_min_x)) in outlines.into_iter().enumerate() {
        let (advance, lsb) = hmtx.metrics(gid);
        let left = bbox_min_x as f64 - lsb as f64;
        let phantoms = [
            Point::new(left, 0.0),
            Point::new(left + advance as f64, 0.0),
            Point::ZERO,
            Point::ZERO,
        ];
        let mut all_points: Vec<Point> = match &outline {
            RawOutline::Empty => Vec::new(),
            RawOutline::Simple { points, .. } => points.clone(),
            RawOutline::Composite { components } => {
                components.iter().map(|c| Point::new(c.dx, c.dy)).collect()
            }
        };
        all_points.extend_from_slice(&phantoms);
        let sparse = gvar.glyph_tuples(gid, all_points.len())?;
        let ends: Vec<usize> = match &outline {
            RawOutline::Simple { contour_ends, .. } => contour_ends.clone(),
            RawOutline::Composite { components } => (0..components.len()).collect(),
            RawOutline::Empty => Vec::new(),
        };
        let composite = matches!(outline, RawOutline::Composite { .. });
        let mut tuples = Vec::with_capacity(sparse.len());
        for (ti, tv) in sparse.into_iter().enumerate() {
            if tv.had_invalid_peak {
                warnings.push(ParseWarning::InvalidRegion { glyph: GlyphId(gid as u16), tuple: ti });
            }
            let dense = if composite {
                // Components are never inferred; unreferenced offsets stay put.
                let mut d = vec![Point::ZERO; all_points.len()];
                for &(i, p) in &tv.deltas.0 {
                    d[i] = p;
                }
                d
            } else {
                apply_iup(&tv.deltas, &all_points, &ends)
            };
            tuples.push((tv.region, dense));
        }
        raw_glyphs.push(RawGlyph { outline, phantoms, tuples });
    }
    let glyphs = assemble::assemble_glyphs(&raw_glyphs, &mut warnings);
    Ok(FontModel {
        units_per_em: head.units_per_em,
        axes,
        glyphs,
        char_map,
        advance_widths: (0..maxp as usize).map(|g| hmtx.metrics(g).0).collect(),
        raw_glyphs,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_roundtrip() {
        let t: Tag = "wght".parse().unwrap();
        assert_eq!(t, Tag::new(b"wght"));
        assert_eq!(t.to_string(), "wght");
        assert!("toolong".parse::<Tag>().is_err());
    }

    #[test]
    fn truncated_header_is_malformed() {
        let bytes = [0u8, 1, 0, 0, 0, 11, 0, 128, 0, 3, 0, 32];
        match parse_font(&bytes) {
            Err(FontError::Malformed { .. }) => {}
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn region_drops_zero_peaks_and_sorts() {
        let r = Region::new(vec![
            (2, Tent::new(0.0, 1.0, 1.0)),
            (0, Tent::new(0.0, 0.0, 0.0)),
            (1, Tent::new(-1.0, -1.0, 0.0)),
        ]);
        assert_eq!(r.tents.len(), 2);
        assert_eq!(r.tents[0].0, 1);
        assert!(r.tent(0).is_none());
    }
}
