//! Evaluation of glyph outlines at arbitrary axis weights and composition of
//! glyphs into words.

mod svg;

use crate::font::{AxisDescriptor, Contour, FontModel, GlyphId, Region, Tag, Tent};
use crate::geom::{cubic_point, Bounds, Point};

pub use svg::{export_svg, format_number, SvgOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error("axis '{0}' has a single value and cannot be set elsewhere")]
    DegenerateAxis(Tag),
    #[error("normalized value {value} on axis '{axis}' lies on a flat avar segment")]
    NonInvertibleSegment { axis: Tag, value: f64, preimage: f64 },
    #[error("unknown glyph {}", .0.0)]
    UnknownGlyph(GlyphId),
    #[error("word is empty")]
    EmptyWord,
    #[error("segment {segment} out of range ({count} segments)")]
    BadSegment { segment: usize, count: usize },
    #[error("expected {expected} axis weights, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Maps a design-space value to a normalized coordinate, applying avar.
///
/// Values outside the axis range are clamped first.
pub fn normalize_axis(axis: &AxisDescriptor, s: f64) -> Result<f64, InterpError> {
    if axis.min == axis.max && s != axis.default {
        return Err(InterpError::DegenerateAxis(axis.tag));
    }
    let s = s.clamp(axis.min, axis.max);
    let w = if s < axis.default {
        (s - axis.default) / (axis.default - axis.min)
    } else if s > axis.default {
        (s - axis.default) / (axis.max - axis.default)
    } else {
        0.0
    };
    Ok(piecewise_map(w, &axis.avar_map))
}

fn piecewise_map(v: f64, map: &[(f64, f64)]) -> f64 {
    if map.is_empty() {
        return v;
    }
    if let Some(&(_, to)) = map.iter().find(|(from, _)| *from == v) {
        return to;
    }
    let (first, last) = (map[0], map[map.len() - 1]);
    if v < first.0 {
        return v + first.1 - first.0;
    }
    if v > last.0 {
        return v + last.1 - last.0;
    }
    let i = map.iter().position(|&(from, _)| from > v).unwrap();
    let (a, b) = (map[i - 1], map[i]);
    a.1 + (b.1 - a.1) * (v - a.0) / (b.0 - a.0)
}

/// Inverse of [`normalize_axis`]. On a flat avar segment the midpoint of the
/// preimage range is reported through the error.
pub fn denormalize_axis(axis: &AxisDescriptor, w: f64) -> Result<f64, InterpError> {
    let w = w.clamp(-1.0, 1.0);
    let from = invert_map(w, &axis.avar_map);
    let v = match from {
        Ok(v) | Err(v) => v,
    };
    let s = if v < 0.0 {
        axis.default + v * (axis.default - axis.min)
    } else {
        axis.default + v * (axis.max - axis.default)
    };
    match from {
        Ok(_) => Ok(s),
        Err(_) => Err(InterpError::NonInvertibleSegment { axis: axis.tag, value: w, preimage: s }),
    }
}

/// Returns the preimage of `w`; `Err` carries the midpoint of a flat range.
fn invert_map(w: f64, map: &[(f64, f64)]) -> Result<f64, f64> {
    if map.is_empty() {
        return Ok(w);
    }
    let hits: Vec<usize> = (0..map.len()).filter(|&i| map[i].1 == w).collect();
    if let (Some(&a), Some(&b)) = (hits.first(), hits.last()) {
        return if a == b { Ok(map[a].0) } else { Err(0.5 * (map[a].0 + map[b].0)) };
    }
    let (first, last) = (map[0], map[map.len() - 1]);
    if w < first.1 {
        return Ok(w - first.1 + first.0);
    }
    if w > last.1 {
        return Ok(w - last.1 + last.0);
    }
    let i = map.iter().position(|&(_, to)| to > w).unwrap();
    let (a, b) = (map[i - 1], map[i]);
    Ok(a.0 + (b.0 - a.0) * (w - a.1) / (b.1 - a.1))
}

/// Tent support: 0 outside [start, end), ramps to 1 at the peak.
pub fn support_scalar(tent: Tent, w: f64) -> f64 {
    let Tent { start, peak, end } = tent;
    if peak == 0.0 || w == peak {
        return 1.0;
    }
    if w < start || w >= end {
        return 0.0;
    }
    if w < peak {
        (w - start) / (peak - start)
    } else {
        (end - w) / (end - peak)
    }
}

/// Product of support scalars over the region's active axes.
pub fn region_scalar(region: &Region, w: &[f64]) -> f64 {
    let mut g = 1.0;
    for &(axis, tent) in &region.tents {
        g *= support_scalar(tent, w[axis]);
        if g == 0.0 {
            return 0.0;
        }
    }
    g
}

/// Componentwise clamp to [-1, 1]; the flag reports whether anything changed.
pub fn clamp_weights(w: &[f64]) -> (Vec<f64>, bool) {
    let mut changed = false;
    let out = w
        .iter()
        .map(|&v| {
            let c = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
            changed |= c != v || v.is_nan();
            c
        })
        .collect();
    (out, changed)
}

/// Per-glyph axis weights for a word, concatenated glyph by glyph.
#[derive(Clone, Debug, PartialEq)]
pub struct WordTheta {
    axis_count: usize,
    values: Vec<f64>,
}

impl WordTheta {
    pub fn zeros(axis_count: usize, glyphs: usize) -> WordTheta {
        WordTheta { axis_count, values: vec![0.0; axis_count * glyphs] }
    }

    /// Every glyph gets the same weights.
    pub fn uniform(w: &[f64], glyphs: usize) -> WordTheta {
        WordTheta { axis_count: w.len(), values: w.repeat(glyphs) }
    }

    pub fn from_flat(axis_count: usize, values: Vec<f64>) -> Result<WordTheta, InterpError> {
        if axis_count == 0 && values.is_empty() {
            return Ok(WordTheta { axis_count, values });
        }
        if axis_count == 0 || values.len() % axis_count != 0 {
            return Err(InterpError::DimensionMismatch { expected: axis_count, got: values.len() });
        }
        Ok(WordTheta { axis_count, values })
    }

    pub fn axis_count(&self) -> usize {
        self.axis_count
    }

    pub fn glyph_count(&self) -> usize {
        self.values.len().checked_div(self.axis_count).unwrap_or(0)
    }

    pub fn glyph(&self, j: usize) -> &[f64] {
        &self.values[j * self.axis_count..(j + 1) * self.axis_count]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn clamped(&self) -> (WordTheta, bool) {
        let (values, changed) = clamp_weights(&self.values);
        (WordTheta { axis_count: self.axis_count, values }, changed)
    }
}

/// Anything made of cubic segments over a flat point list.
pub trait Curves {
    fn points(&self) -> &[Point];
    fn segments(&self) -> &[[usize; 4]];

    fn segment_controls(&self, s: usize) -> [Point; 4] {
        let p = self.points();
        self.segments()[s].map(|i| p[i])
    }
}

/// Evaluates segment `segment` at parameter `t` (clamped to [0, 1]).
pub fn evaluate_curve<C: Curves + ?Sized>(curves: &C, segment: usize, t: f64) -> Result<Point, InterpError> {
    let count = curves.segments().len();
    if segment >= count {
        return Err(InterpError::BadSegment { segment, count });
    }
    Ok(cubic_point(&curves.segment_controls(segment), t.clamp(0.0, 1.0)))
}

/// One glyph evaluated at fixed axis weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphInstance {
    pub glyph: GlyphId,
    /// Outline control points followed by the two phantom points.
    pub points: Vec<Point>,
    pub gamma: Vec<f64>,
    pub contours: Vec<Contour>,
    segments: Vec<[usize; 4]>,
}

impl GlyphInstance {
    pub fn left_phantom(&self) -> Point {
        self.points[self.points.len() - 2]
    }

    pub fn right_phantom(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn advance(&self) -> f64 {
        self.right_phantom().x - self.left_phantom().x
    }

    pub fn outline_points(&self) -> &[Point] {
        &self.points[..self.points.len() - 2]
    }
}

impl Curves for GlyphInstance {
    fn points(&self) -> &[Point] {
        &self.points
    }
    fn segments(&self) -> &[[usize; 4]] {
        &self.segments
    }
}

fn check_dims(font: &FontModel, w: &[f64]) -> Result<(), InterpError> {
    if w.len() != font.axis_count() {
        return Err(InterpError::DimensionMismatch { expected: font.axis_count(), got: w.len() });
    }
    Ok(())
}

/// Scaling factor of every delta set of `glyph` at (clamped) weights `w`.
pub fn glyph_gamma(font: &FontModel, glyph: GlyphId, w: &[f64]) -> Result<Vec<f64>, InterpError> {
    check_dims(font, w)?;
    let g = font.glyph(glyph).ok_or(InterpError::UnknownGlyph(glyph))?;
    let (w, _) = clamp_weights(w);
    Ok(g.regions.iter().map(|r| region_scalar(r, &w)).collect())
}

/// Default points plus every delta set scaled by its region scalar.
pub fn interpolate_glyph(font: &FontModel, glyph: GlyphId, w: &[f64]) -> Result<GlyphInstance, InterpError> {
    let gamma = glyph_gamma(font, glyph, w)?;
    let g = font.glyph(glyph).ok_or(InterpError::UnknownGlyph(glyph))?;
    let mut points = g.default_points.clone();
    for (delta, &s) in g.deltas.iter().zip(&gamma) {
        if s == 0.0 {
            continue;
        }
        for (p, d) in points.iter_mut().zip(delta) {
            *p += *d * s;
        }
    }
    Ok(GlyphInstance {
        glyph,
        points,
        gamma,
        contours: g.contours.clone(),
        segments: g.segments().to_vec(),
    })
}

/// A word: glyph instances translated into one horizontal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct WordLayout {
    pub glyphs: Vec<GlyphId>,
    pub instances: Vec<GlyphInstance>,
    /// Translation applied to each glyph (y is always 0).
    pub offsets: Vec<Point>,
    /// All composed points, glyph by glyph, phantoms included.
    pub points: Vec<Point>,
    /// Index of each glyph's first point in `points`.
    pub starts: Vec<usize>,
    segments: Vec<[usize; 4]>,
    segment_glyph: Vec<usize>,
}

impl WordLayout {
    pub fn glyph_count(&self) -> usize {
        self.glyphs.len()
    }

    /// Glyph index (within the word) owning segment `s`.
    pub fn segment_glyph(&self, s: usize) -> usize {
        self.segment_glyph[s]
    }

    /// Global segment index range of glyph `j`.
    pub fn glyph_segments(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.segment_glyph.partition_point(|&g| g < j);
        let end = self.segment_glyph.partition_point(|&g| g <= j);
        start..end
    }

    /// Sum of phantom spans.
    pub fn advance(&self) -> f64 {
        self.instances.iter().map(GlyphInstance::advance).sum()
    }

    /// Bounds of the outline points (phantoms excluded).
    pub fn outline_bounds(&self) -> Option<Bounds> {
        let pts = self.instances.iter().enumerate().flat_map(|(j, inst)| {
            let off = self.offsets[j];
            inst.outline_points().iter().map(move |&p| p + off)
        });
        Bounds::from_points(pts)
    }
}

impl Curves for WordLayout {
    fn points(&self) -> &[Point] {
        &self.points
    }
    fn segments(&self) -> &[[usize; 4]] {
        &self.segments
    }
}

/// Interpolates every glyph with its own weights and places them left to right
/// using the interpolated sidebearing points.
pub fn layout_word(font: &FontModel, glyphs: &[GlyphId], theta: &WordTheta) -> Result<WordLayout, InterpError> {
    if glyphs.is_empty() {
        return Err(InterpError::EmptyWord);
    }
    if theta.axis_count() != font.axis_count() || theta.glyph_count() != glyphs.len() {
        return Err(InterpError::DimensionMismatch {
            expected: font.axis_count() * glyphs.len(),
            got: theta.as_slice().len(),
        });
    }
    let mut instances = Vec::with_capacity(glyphs.len());
    for (j, &g) in glyphs.iter().enumerate() {
        instances.push(interpolate_glyph(font, g, theta.glyph(j))?);
    }
    Ok(compose(glyphs.to_vec(), instances))
}

/// Places instances left to right from their phantom points.
pub fn compose(glyphs: Vec<GlyphId>, instances: Vec<GlyphInstance>) -> WordLayout {
    let mut offsets = Vec::with_capacity(instances.len());
    let mut points = Vec::new();
    let mut starts = Vec::with_capacity(instances.len());
    let mut segments = Vec::new();
    let mut segment_glyph = Vec::new();
    let mut pen = 0.0;
    for (j, inst) in instances.iter().enumerate() {
        let off = Point::new(pen - inst.left_phantom().x, 0.0);
        pen += inst.advance();
        let base = points.len();
        starts.push(base);
        offsets.push(off);
        points.extend(inst.points.iter().map(|&p| p + off));
        for seg in &inst.segments {
            segments.push(seg.map(|i| i + base));
            segment_glyph.push(j);
        }
    }
    WordLayout { glyphs, instances, offsets, points, starts, segments, segment_glyph }
}
