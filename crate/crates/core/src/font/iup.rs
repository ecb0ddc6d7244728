//! Interpolation of untouched points.

use super::SparseDeltas;
use crate::geom::Point;

/// Expands sparse deltas to every point using the inferred-delta rule.
///
/// `points` holds the default coordinates of the outline followed by any
/// phantom points; `contour_ends` covers only the outline. Points after the
/// last contour are handled as single-point contours, so an unreferenced
/// phantom gets a zero delta.
pub fn apply_iup(sparse: &SparseDeltas, points: &[Point], contour_ends: &[usize]) -> Vec<Point> {
    let n = points.len();
    let mut explicit: Vec<Option<Point>> = vec![None; n];
    for &(i, d) in &sparse.0 {
        if i < n {
            explicit[i] = Some(d);
        }
    }
    let mut out = vec![Point::ZERO; n];
    let mut start = 0;
    let outline_end = contour_ends.last().map_or(0, |&e| e + 1);
    let ranges = contour_ends
        .iter()
        .map(|&e| {
            let r = start..e + 1;
            start = e + 1;
            r
        })
        .chain((outline_end..n).map(|i| i..i + 1))
        .collect::<Vec<_>>();
    for range in ranges {
        let idx: Vec<usize> = range.clone().collect();
        let refs: Vec<usize> = (0..idx.len()).filter(|&k| explicit[idx[k]].is_some()).collect();
        if refs.is_empty() {
            continue;
        }
        for &k in &refs {
            out[idx[k]] = explicit[idx[k]].unwrap();
        }
        if refs.len() == idx.len() {
            continue;
        }
        let len = idx.len();
        for (r, &k1) in refs.iter().enumerate() {
            let k2 = refs[(r + 1) % refs.len()];
            let (p1, p2) = (points[idx[k1]], points[idx[k2]]);
            let (d1, d2) = (out[idx[k1]], out[idx[k2]]);
            let mut k = (k1 + 1) % len;
            while k != k2 {
                let p = points[idx[k]];
                out[idx[k]] = Point::new(
                    infer(p.x, p1.x, p2.x, d1.x, d2.x),
                    infer(p.y, p1.y, p2.y, d1.y, d2.y),
                );
                k = (k + 1) % len;
            }
        }
    }
    out
}

fn infer(x: f64, x1: f64, x2: f64, d1: f64, d2: f64) -> f64 {
    if x1 == x2 {
        return if d1 == d2 { d1 } else { 0.0 };
    }
    let (x1, x2, d1, d2) = if x1 > x2 { (x2, x1, d2, d1) } else { (x1, x2, d1, d2) };
    if x <= x1 {
        d1
    } else if x >= x2 {
        d2
    } else {
        d1 + (x - x1) * ((d2 - d1) / (x2 - x1))
    }
}
