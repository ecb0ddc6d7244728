//! Conversion of quadratic TrueType contours into cubic control polygons.
//!
//! The conversion only depends on the on/off-curve flags, so it is a fixed
//! linear map applied identically to default coordinates and every delta set.

use super::Contour;
use crate::geom::Point;

/// Row `i` lists the source points (and weights) forming cubic point `i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElevationMap {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub source_len: usize,
}

impl ElevationMap {
    pub fn apply(&self, source: &[Point]) -> Vec<Point> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(Point::ZERO, |acc, &(j, w)| acc + source[j] * w))
            .collect()
    }

    /// Reverses the traversal direction of a closed contour in place.
    pub(crate) fn reverse_contour(&mut self, c: &Contour) {
        let old: Vec<_> = self.rows[c.start..c.start + c.count].to_vec();
        let n = c.count;
        for i in 0..n {
            self.rows[c.start + i] = old[(n - i) % n].clone();
        }
    }
}

/// Contour in flag form, as indices into a shared point list.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadContour {
    pub start: usize,
    pub on_curve: Vec<bool>,
}

type Combo = Vec<(usize, f64)>;

fn single(i: usize) -> Combo {
    vec![(i, 1.0)]
}

fn mix(a: &Combo, wa: f64, b: &Combo, wb: f64) -> Combo {
    let mut out: Combo = Vec::with_capacity(a.len() + b.len());
    let terms = a.iter().map(|&(i, w)| (i, w * wa)).chain(b.iter().map(|&(i, w)| (i, w * wb)));
    for (i, w) in terms {
        match out.iter_mut().find(|(j, _)| *j == i) {
            Some(e) => e.1 += w,
            None => out.push((i, w)),
        }
    }
    out.retain(|&(_, w)| w != 0.0);
    out.sort_by_key(|&(i, _)| i);
    out
}

/// Pushes the start and both controls of one elevated segment.
fn emit(cur: &Combo, ctrl: &Option<Combo>, end: &Combo, rows: &mut Vec<Combo>) {
    rows.push(cur.clone());
    match ctrl {
        None => {
            rows.push(mix(cur, 2.0 / 3.0, end, 1.0 / 3.0));
            rows.push(mix(cur, 1.0 / 3.0, end, 2.0 / 3.0));
        }
        Some(c) => {
            rows.push(mix(cur, 1.0 / 3.0, c, 2.0 / 3.0));
            rows.push(mix(end, 1.0 / 3.0, c, 2.0 / 3.0));
        }
    }
}

/// Elevates every contour to cubic segments.
///
/// Returns the map from source points to cubic points, the cubic contours and
/// the indices of input contours dropped for having fewer than two points.
/// `extra` trailing source points (the phantoms) are copied through unchanged.
pub fn elevate_outline(contours: &[QuadContour], extra: usize) -> (ElevationMap, Vec<Contour>, Vec<usize>) {
    let mut rows: Vec<Combo> = Vec::new();
    let mut out_contours = Vec::new();
    let mut dropped = Vec::new();
    let mut source_len = 0;
    for (ci, qc) in contours.iter().enumerate() {
        let m = qc.on_curve.len();
        source_len = source_len.max(qc.start + m);
        if m < 2 {
            dropped.push(ci);
            continue;
        }
        let start = rows.len();
        let idx = |k: usize| qc.start + (k % m);
        let (first_node, order): (Combo, Vec<usize>) = match qc.on_curve.iter().position(|&on| on) {
            Some(f) => (single(idx(f)), (1..=m).map(|k| (f + k) % m).collect()),
            None => (mix(&single(idx(m - 1)), 0.5, &single(idx(0)), 0.5), (0..m).collect()),
        };
        let mut cur = first_node.clone();
        let mut ctrl: Option<Combo> = None;
        let all_off = !qc.on_curve.iter().any(|&on| on);
        for (step, &k) in order.iter().enumerate() {
            let closing = !all_off && step == order.len() - 1;
            let q = if closing { first_node.clone() } else { single(idx(k)) };
            if closing || qc.on_curve[k] {
                emit(&cur, &ctrl, &q, &mut rows);
                cur = q;
                ctrl = None;
            } else if let Some(c) = ctrl.take() {
                let mid = mix(&c, 0.5, &q, 0.5);
                emit(&cur, &Some(c), &mid, &mut rows);
                cur = mid;
                ctrl = Some(q);
            } else {
                ctrl = Some(q);
            }
        }
        if all_off {
            emit(&cur, &ctrl, &first_node, &mut rows);
        }
        out_contours.push(Contour { start, count: rows.len() - start, closed: true });
    }
    for e in 0..extra {
        rows.push(single(source_len + e));
    }
    (ElevationMap { rows, source_len: source_len + extra }, out_contours, dropped)
}
