//! Analytic derivatives of interpolated points with respect to axis weights.
//!
//! Row layout of every Jacobian: point `i` owns rows `2i` (x) and `2i + 1` (y).
//! Word Jacobians have `n` columns per glyph, glyph by glyph.

mod gradcheck;

use nalgebra::DMatrix;

use crate::font::{FontModel, GlyphId, Region, Tent};
use crate::geom::bernstein3;
use crate::interp::{
    clamp_weights, compose, interpolate_glyph, support_scalar, InterpError, WordLayout, WordTheta,
};

pub use gradcheck::{gradcheck, GradcheckConfig, GradcheckReport, GradcheckRow};

/// Right-hand derivative of [`support_scalar`].
pub fn d_support(tent: Tent, w: f64) -> f64 {
    let Tent { start, peak, end } = tent;
    if peak == 0.0 {
        return 0.0;
    }
    if w >= start && w < peak {
        1.0 / (peak - start)
    } else if w >= peak && w < end {
        -1.0 / (end - peak)
    } else {
        0.0
    }
}

/// Gradient of the region scalar over all `w.len()` axes.
pub fn d_region_scalar(region: &Region, w: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; w.len()];
    let phis: Vec<f64> = region.tents.iter().map(|&(a, t)| support_scalar(t, w[a])).collect();
    for (k, &(axis, tent)) in region.tents.iter().enumerate() {
        let slope = d_support(tent, w[axis]);
        if slope == 0.0 {
            continue;
        }
        let others: f64 = phis.iter().enumerate().filter(|&(q, _)| q != k).map(|(_, p)| p).product();
        grad[axis] = slope * others;
    }
    grad
}

/// 2k x n Jacobian of one glyph's points at weights `w`.
pub fn glyph_jacobian(font: &FontModel, glyph: GlyphId, w: &[f64]) -> Result<DMatrix<f64>, InterpError> {
    let n = font.axis_count();
    if w.len() != n {
        return Err(InterpError::DimensionMismatch { expected: n, got: w.len() });
    }
    let g = font.glyph(glyph).ok_or(InterpError::UnknownGlyph(glyph))?;
    let (w, _) = clamp_weights(w);
    let k = g.point_count();
    let mut jac = DMatrix::zeros(2 * k, n);
    for (delta, region) in g.deltas.iter().zip(&g.regions) {
        let dg = d_region_scalar(region, &w);
        for (a, &s) in dg.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (i, d) in delta.iter().enumerate() {
                jac[(2 * i, a)] += d.x * s;
                jac[(2 * i + 1, a)] += d.y * s;
            }
        }
    }
    Ok(jac)
}

/// Layout of a word together with its Jacobian.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub theta: WordTheta,
    pub layout: WordLayout,
    pub jacobian: DMatrix<f64>,
}

impl Evaluation {
    /// 2 x dim Jacobian of the point on segment `s` at parameter `t`.
    pub fn curve_point_jacobian(&self, s: usize, t: f64) -> DMatrix<f64> {
        curve_point_jacobian(&self.jacobian, &crate::interp::Curves::segments(&self.layout)[s], t)
    }
}

/// Evaluates the layout and its Jacobian in one pass.
pub fn evaluate_word(font: &FontModel, glyphs: &[GlyphId], theta: &WordTheta) -> Result<Evaluation, InterpError> {
    if glyphs.is_empty() {
        return Err(InterpError::EmptyWord);
    }
    let n = font.axis_count();
    if theta.axis_count() != n || theta.glyph_count() != glyphs.len() {
        return Err(InterpError::DimensionMismatch { expected: n * glyphs.len(), got: theta.as_slice().len() });
    }
    let mut instances = Vec::with_capacity(glyphs.len());
    let mut blocks = Vec::with_capacity(glyphs.len());
    for (j, &g) in glyphs.iter().enumerate() {
        instances.push(interpolate_glyph(font, g, theta.glyph(j))?);
        blocks.push(glyph_jacobian(font, g, theta.glyph(j))?);
    }
    let layout = compose(glyphs.to_vec(), instances);
    let jacobian = assemble_word_jacobian(&layout, &blocks, n);
    Ok(Evaluation { theta: theta.clone(), layout, jacobian })
}

/// Jacobian of every composed word point with respect to all glyph weights.
pub fn word_jacobian(font: &FontModel, glyphs: &[GlyphId], theta: &WordTheta) -> Result<DMatrix<f64>, InterpError> {
    evaluate_word(font, glyphs, theta).map(|e| e.jacobian)
}

fn assemble_word_jacobian(layout: &WordLayout, blocks: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let rows = 2 * layout.points.len();
    let cols = n * blocks.len();
    let mut jac = DMatrix::zeros(rows, cols);
    // accumulated d(pen)/dTheta from the spans of earlier glyphs
    let mut pen = vec![0.0; cols];
    for (j, block) in blocks.iter().enumerate() {
        let k = block.nrows() / 2;
        let (l, r) = (k - 2, k - 1);
        let base = layout.starts[j];
        for i in 0..k {
            let row = 2 * (base + i);
            for a in 0..n {
                jac[(row, j * n + a)] = block[(2 * i, a)] - block[(2 * l, a)];
                jac[(row + 1, j * n + a)] = block[(2 * i + 1, a)];
            }
            for (c, &v) in pen.iter().enumerate().take(j * n) {
                jac[(row, c)] += v;
            }
        }
        for a in 0..n {
            pen[j * n + a] = block[(2 * r, a)] - block[(2 * l, a)];
        }
    }
    jac
}

/// Bernstein combination of a segment's four control-point rows.
pub fn curve_point_jacobian(jacobian: &DMatrix<f64>, segment: &[usize; 4], t: f64) -> DMatrix<f64> {
    let b = bernstein3(t.clamp(0.0, 1.0));
    let cols = jacobian.ncols();
    let mut out = DMatrix::zeros(2, cols);
    for (q, &i) in segment.iter().enumerate() {
        if b[q] == 0.0 {
            continue;
        }
        for c in 0..cols {
            out[(0, c)] += b[q] * jacobian[(2 * i, c)];
            out[(1, c)] += b[q] * jacobian[(2 * i + 1, c)];
        }
    }
    out
}
