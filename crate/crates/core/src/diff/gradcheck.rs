//! Finite-difference verification of the analytic Jacobians.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{glyph_jacobian, word_jacobian};
use crate::font::{FontModel, GlyphId, Tag};
use crate::interp::{interpolate_glyph, layout_word, WordTheta};

#[derive(Clone, Debug)]
pub struct GradcheckConfig {
    pub samples: usize,
    pub seed: u64,
    pub step: f64,
    /// Samples closer than this to a support breakpoint are rejected.
    pub margin: f64,
    /// Adds 1 to every analytic entry; used as a negative control.
    pub corrupt: bool,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig { samples: 100, seed: 0, step: 1e-5, margin: 1e-4, corrupt: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckRow {
    /// "glyph N" for glyph Jacobians or "word[j]" for word columns of glyph j.
    pub target: String,
    pub axis: Tag,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub rows: Vec<GradcheckRow>,
    pub samples: usize,
    pub rejected: usize,
    pub max_rel_error: f64,
}

impl GradcheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Per-axis breakpoints of every region of the given glyphs, plus the bounds.
fn breakpoints(font: &FontModel, glyphs: &[GlyphId]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![-1.0, 1.0]; font.axis_count()];
    for &g in glyphs {
        if let Some(gv) = font.glyph(g) {
            for r in &gv.regions {
                for &(a, t) in &r.tents {
                    out[a].extend([t.start, t.peak, t.end]);
                }
            }
        }
    }
    out
}

fn sample(rng: &mut ChaCha8Rng, bps: &[Vec<f64>], margin: f64) -> Option<Vec<f64>> {
    let w: Vec<f64> = (0..bps.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let near = w.iter().zip(bps).any(|(&v, b)| b.iter().any(|&p| (v - p).abs() < margin));
    (!near).then_some(w)
}

fn rel_error(a: f64, f: f64) -> f64 {
    (a - f).abs() / f.abs().max(1.0)
}

fn column_errors(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>, corrupt: bool) -> Vec<f64> {
    (0..analytic.ncols())
        .map(|c| {
            (0..analytic.nrows())
                .map(|r| {
                    let a = analytic[(r, c)] + if corrupt { 1.0 } else { 0.0 };
                    rel_error(a, numeric[(r, c)])
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn flatten(points: &[crate::geom::Point]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y]).collect()
}

/// Compares every glyph Jacobian in `glyphs`, and the word Jacobian of the
/// whole sequence, against central differences at random interior weights.
pub fn gradcheck(font: &FontModel, glyphs: &[GlyphId], config: &GradcheckConfig) -> GradcheckReport {
    let n = font.axis_count();
    let mut unique: Vec<GlyphId> = glyphs.to_vec();
    unique.sort();
    unique.dedup();
    let bps = breakpoints(font, &unique);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut glyph_err = vec![vec![0.0f64; n]; unique.len()];
    let mut word_err = vec![0.0f64; n * glyphs.len()];
    let mut rejected = 0;
    let mut used = 0;
    let h = config.step;
    while used < config.samples {
        // bounded rejection keeps pathological breakpoint sets from looping
        if rejected > 1000 * (config.samples + 1) {
            break;
        }
        let mut theta = Vec::with_capacity(n * glyphs.len());
        let mut ok = true;
        for _ in 0..glyphs.len().max(1) {
            match sample(&mut rng, &bps, config.margin) {
                Some(w) => theta.extend(w),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            rejected += 1;
            continue;
        }
        used += 1;
        for (u, &g) in unique.iter().enumerate() {
            let w = &theta[..n];
            let analytic = glyph_jacobian(font, g, w).expect("glyph exists");
            let mut numeric = DMatrix::zeros(analytic.nrows(), n);
            for a in 0..n {
                let mut wp = w.to_vec();
                let mut wm = w.to_vec();
                wp[a] += h;
                wm[a] -= h;
                let pp = flatten(&interpolate_glyph(font, g, &wp).unwrap().points);
                let pm = flatten(&interpolate_glyph(font, g, &wm).unwrap().points);
                for r in 0..pp.len() {
                    numeric[(r, a)] = (pp[r] - pm[r]) / (2.0 * h);
                }
            }
            for (a, e) in column_errors(&analytic, &numeric, config.corrupt).into_iter().enumerate() {
                glyph_err[u][a] = glyph_err[u][a].max(e);
            }
        }
        if glyphs.len() > 1 {
            let t = WordTheta::from_flat(n, theta.clone()).unwrap();
            let analytic = word_jacobian(font, glyphs, &t).expect("valid word");
            let mut numeric = DMatrix::zeros(analytic.nrows(), analytic.ncols());
            for c in 0..theta.len() {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[c] += h;
                tm[c] -= h;
                let lp = layout_word(font, glyphs, &WordTheta::from_flat(n, tp).unwrap()).unwrap();
                let lm = layout_word(font, glyphs, &WordTheta::from_flat(n, tm).unwrap()).unwrap();
                let (pp, pm) = (flatten(&lp.points), flatten(&lm.points));
                for r in 0..pp.len() {
                    numeric[(r, c)] = (pp[r] - pm[r]) / (2.0 * h);
                }
            }
            for (c, e) in column_errors(&analytic, &numeric, config.corrupt).into_iter().enumerate() {
                word_err[c] = word_err[c].max(e);
            }
        }
    }
    let mut rows = Vec::new();
    for (u, &g) in unique.iter().enumerate() {
        for a in 0..n {
            rows.push(GradcheckRow {
                target: format!("glyph {}", g.0),
                axis: font.axes[a].tag,
                max_rel_error: glyph_err[u][a],
            });
        }
    }
    if glyphs.len() > 1 {
        for (c, &e) in word_err.iter().enumerate() {
            rows.push(GradcheckRow { target: format!("word[{}]", c / n), axis: font.axes[c % n].tag, max_rel_error: e });
        }
    }
    let max_rel_error = rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    GradcheckReport { rows, samples: used, rejected, max_rel_error }
}
