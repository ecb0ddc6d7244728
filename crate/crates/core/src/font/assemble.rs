//! From raw per-glyph records to cubic [`GlyphVariation`]s: composite
//! flattening, elevation and orientation normalization.

use super::elevate::{elevate_outline, QuadContour};
use super::{GlyphId, GlyphVariation, ParseWarning, QuadraticSource, RawGlyph, RawOutline, Region};
use crate::geom::{cubic_point, inside_even_odd, signed_area, Point};

const MAX_COMPOSITE_DEPTH: usize = 5;

/// Flattened quadratic outline with dense deltas over outline + 2 phantoms.
struct Flat {
    points: Vec<Point>,
    on_curve: Vec<bool>,
    ends: Vec<usize>,
    regions: Vec<Region>,
    deltas: Vec<Vec<Point>>,
}

impl Flat {
    fn outline_len(&self) -> usize {
        self.points.len() - 2
    }

    /// Adds a delta set, merging with an existing identical region.
    fn add_set(&mut self, region: &Region, deltas: Vec<Point>) {
        match self.regions.iter().position(|r| r == region) {
            Some(i) => {
                for (a, d) in self.deltas[i].iter_mut().zip(deltas) {
                    *a += d;
                }
            }
            None => {
                self.regions.push(region.clone());
                self.deltas.push(deltas);
            }
        }
    }
}

pub(crate) fn assemble_glyphs(raw: &[RawGlyph], warnings: &mut Vec<ParseWarning>) -> Vec<GlyphVariation> {
    (0..raw.len())
        .map(|gid| {
            let flat = flatten(raw, gid, 0, warnings);
            build_variation(flat, GlyphId(gid as u16), warnings)
        })
        .collect()
}

fn flatten(raw: &[RawGlyph], gid: usize, depth: usize, warnings: &mut Vec<ParseWarning>) -> Flat {
    let g = &raw[gid];
    let phantoms = [g.phantoms[0], g.phantoms[1]];
    match &g.outline {
        RawOutline::Empty => Flat {
            points: phantoms.to_vec(),
            on_curve: vec![true; 2],
            ends: Vec::new(),
            regions: g.tuples.iter().map(|(r, _)| r.clone()).collect(),
            deltas: g.tuples.iter().map(|(_, d)| d[..2].to_vec()).collect(),
        },
        RawOutline::Simple { points, on_curve, contour_ends } => {
            let n = points.len();
            let mut pts = points.clone();
            pts.extend_from_slice(&phantoms);
            let mut on = on_curve.clone();
            on.extend([true, true]);
            Flat {
                points: pts,
                on_curve: on,
                ends: contour_ends.clone(),
                regions: g.tuples.iter().map(|(r, _)| r.clone()).collect(),
                deltas: g.tuples.iter().map(|(_, d)| d[..n + 2].to_vec()).collect(),
            }
        }
        RawOutline::Composite { components } => {
            let nc = components.len();
            let mut points = Vec::new();
            let mut on_curve = Vec::new();
            let mut ends = Vec::new();
            // (first flattened index, count) of each component
            let mut spans = Vec::with_capacity(nc);
            let mut children = Vec::with_capacity(nc);
            for (ci, comp) in components.iter().enumerate() {
                if depth + 1 > MAX_COMPOSITE_DEPTH {
                    warnings.push(ParseWarning::CompositeTooDeep { glyph: GlyphId(gid as u16) });
                    spans.push((points.len(), 0));
                    children.push(None);
                    continue;
                }
                if !comp.xy_offset {
                    warnings.push(ParseWarning::PointMatchedComponent { glyph: GlyphId(gid as u16), component: ci });
                }
                let child = flatten(raw, comp.glyph as usize, depth + 1, warnings);
                let base = points.len();
                let offset = Point::new(comp.dx, comp.dy);
                for i in 0..child.outline_len() {
                    points.push(comp.apply(child.points[i]) + offset);
                    on_curve.push(child.on_curve[i]);
                }
                ends.extend(child.ends.iter().map(|e| e + base));
                spans.push((base, child.outline_len()));
                children.push(Some(child));
            }
            let n = points.len();
            points.extend_from_slice(&phantoms);
            on_curve.extend([true, true]);
            let mut flat = Flat { points, on_curve, ends, regions: Vec::new(), deltas: Vec::new() };
            for (region, d) in &g.tuples {
                let mut dense = vec![Point::ZERO; n + 2];
                for (ci, &(base, count)) in spans.iter().enumerate() {
                    for p in &mut dense[base..base + count] {
                        *p += d[ci];
                    }
                }
                dense[n] = d[nc];
                dense[n + 1] = d[nc + 1];
                flat.add_set(region, dense);
            }
            for (ci, child) in children.into_iter().enumerate() {
                let Some(child) = child else { continue };
                let (base, count) = spans[ci];
                for (region, d) in child.regions.iter().zip(child.deltas) {
                    let mut dense = vec![Point::ZERO; n + 2];
                    for i in 0..count {
                        dense[base + i] = components[ci].apply(d[i]);
                    }
                    flat.add_set(region, dense);
                }
            }
            flat
        }
    }
}

fn build_variation(flat: Flat, gid: GlyphId, warnings: &mut Vec<ParseWarning>) -> GlyphVariation {
    let mut start = 0;
    let quads: Vec<QuadContour> = flat
        .ends
        .iter()
        .map(|&e| {
            let q = QuadContour { start, on_curve: flat.on_curve[start..=e].to_vec() };
            start = e + 1;
            q
        })
        .collect();
    let (mut map, contours, dropped) = elevate_outline(&quads, 2);
    for contour in dropped {
        warnings.push(ParseWarning::DegenerateContour { glyph: gid, contour });
    }
    let default = map.apply(&flat.points);
    let polys: Vec<Vec<Point>> = contours
        .iter()
        .map(|c| {
            let segs = c.segment_count();
            let mut poly = Vec::with_capacity(segs * 4);
            for s in 0..segs {
                let seg = [0, 1, 2, 3].map(|j| default[c.start + (3 * s + j) % c.count]);
                for k in 0..4 {
                    poly.push(cubic_point(&seg, k as f64 / 4.0));
                }
            }
            poly
        })
        .collect();
    for (ci, c) in contours.iter().enumerate() {
        let area = signed_area(&polys[ci]);
        if area == 0.0 {
            continue;
        }
        let probe = polys[ci][0];
        let depth = polys
            .iter()
            .enumerate()
            .filter(|&(cj, poly)| cj != ci && inside_even_odd(probe, poly))
            .count();
        let want_ccw = depth % 2 == 0;
        if (area > 0.0) != want_ccw {
            map.reverse_contour(c);
        }
    }
    let default_points = map.apply(&flat.points);
    let deltas: Vec<Vec<Point>> = flat.deltas.iter().map(|d| map.apply(d)).collect();
    let source = QuadraticSource {
        points: flat.points,
        on_curve: flat.on_curve,
        contour_ends: flat.ends,
        deltas: flat.deltas,
    };
    GlyphVariation::new(default_points, contours, deltas, flat.regions, source, map)
}
