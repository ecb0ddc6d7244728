//! Residual-form energies over word weights.
//!
//! A term's value is `weight * |r|^2`; solvers see the residual scaled by
//! `sqrt(weight)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::collide::{
    detect_pairwise, detect_static, nearest_on_cubic, sample_outline, ColliderScene, ContactSource,
};
use crate::diff::{curve_point_jacobian, evaluate_word, Evaluation};
use crate::font::{FontModel, GlyphId};
use crate::geom::Point;
use crate::interp::{evaluate_curve, Curves, InterpError, WordLayout, WordTheta};
use crate::raster::{image_residual_jacobian, rasterize, RasterConfig, SoftImage};
use crate::solve::{Objective, Residuals, SolveError};

pub const DEFAULT_DRAG_LAMBDA: f64 = 1e-2;
pub const DEFAULT_COLLISION_WEIGHT: f64 = 1e4;
pub const DEFAULT_CONSTRAINT_WEIGHT: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("segment {segment} out of range ({count} segments)")]
    BadSegment { segment: usize, count: usize },
    #[error("{kind} needs at least {needed} handles, got {got}")]
    Arity { kind: ConstraintKind, needed: usize, got: usize },
    #[error("pin needs one target per handle ({handles} handles, {targets} targets)")]
    PinTargets { handles: usize, targets: usize },
    #[error("target image is {got:?}, raster grid is {expected:?}")]
    SizeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("term expects {expected} weights, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative weight {0}")]
    NegativeWeight(f64),
}

/// A point on the outline: segment `segment` of the layout at parameter `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Handle {
    pub segment: usize,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Pin,
    SameX,
    SameY,
    Collinear,
}

impl ConstraintKind {
    pub fn min_handles(self) -> usize {
        match self {
            ConstraintKind::Pin => 1,
            ConstraintKind::SameX | ConstraintKind::SameY => 2,
            ConstraintKind::Collinear => 3,
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Pin => "pin",
            ConstraintKind::SameX => "same_x",
            ConstraintKind::SameY => "same_y",
            ConstraintKind::Collinear => "collinear",
        })
    }
}

impl FromStr for ConstraintKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pin" => Ok(ConstraintKind::Pin),
            "same_x" => Ok(ConstraintKind::SameX),
            "same_y" => Ok(ConstraintKind::SameY),
            "collinear" => Ok(ConstraintKind::Collinear),
            other => Err(format!("unknown constraint kind {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Drag { handle: Handle, target: Point, theta_prev: Vec<f64>, lambda: f64 },
    Constraint { kind: ConstraintKind, handles: Vec<Handle>, targets: Vec<Point>, units_per_em: f64 },
    /// Contacts are re-detected at every evaluation.
    Collision { scene: ColliderScene, density: usize },
    Elastic { rest: Vec<f64> },
    Kinetic { predicted: Vec<f64> },
    Image { target: SoftImage, config: RasterConfig },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTerm {
    pub kind: TermKind,
    pub weight: f64,
}

/// Unweighted residuals of one term and their Jacobian.
#[derive(Clone, Debug)]
pub struct TermResiduals {
    pub r: DVector<f64>,
    pub j: DMatrix<f64>,
}

pub fn drag_energy(handle: Handle, target: Point, theta_prev: Vec<f64>, lambda: f64) -> EnergyTerm {
    EnergyTerm { kind: TermKind::Drag { handle, target, theta_prev, lambda }, weight: 1.0 }
}

pub fn constraint_energy(
    kind: ConstraintKind,
    handles: Vec<Handle>,
    targets: Vec<Point>,
    units_per_em: f64,
) -> Result<EnergyTerm, EnergyError> {
    if handles.len() < kind.min_handles() {
        return Err(EnergyError::Arity { kind, needed: kind.min_handles(), got: handles.len() });
    }
    if kind == ConstraintKind::Pin && targets.len() != handles.len() {
        return Err(EnergyError::PinTargets { handles: handles.len(), targets: targets.len() });
    }
    Ok(EnergyTerm {
        kind: TermKind::Constraint { kind, handles, targets, units_per_em },
        weight: DEFAULT_CONSTRAINT_WEIGHT,
    })
}

pub fn collision_energy(scene: ColliderScene, density: usize) -> EnergyTerm {
    EnergyTerm { kind: TermKind::Collision { scene, density }, weight: DEFAULT_COLLISION_WEIGHT }
}

pub fn elastic_energy(rest: Vec<f64>, stiffness: f64) -> EnergyTerm {
    EnergyTerm { kind: TermKind::Elastic { rest }, weight: stiffness }
}

pub fn kinetic_energy(predicted: Vec<f64>, mass: f64) -> EnergyTerm {
    EnergyTerm { kind: TermKind::Kinetic { predicted }, weight: mass }
}

pub fn image_energy(target: SoftImage, config: RasterConfig) -> Result<EnergyTerm, EnergyError> {
    if (target.width, target.height) != (config.width, config.height) {
        return Err(EnergyError::SizeMismatch {
            expected: (config.width, config.height),
            got: (target.width, target.height),
        });
    }
    Ok(EnergyTerm { kind: TermKind::Image { target, config }, weight: 1.0 })
}

fn check_handle(layout: &WordLayout, h: Handle) -> Result<(), EnergyError> {
    let count = layout.segments().len();
    if h.segment >= count {
        return Err(EnergyError::BadSegment { segment: h.segment, count });
    }
    Ok(())
}

pub fn handle_point(layout: &WordLayout, h: Handle) -> Result<Point, EnergyError> {
    check_handle(layout, h)?;
    Ok(evaluate_curve(layout, h.segment, h.t).expect("checked segment"))
}

fn handle_jacobian(eval: &Evaluation, h: Handle) -> DMatrix<f64> {
    curve_point_jacobian(&eval.jacobian, &eval.layout.segments()[h.segment], h.t)
}

fn difference_term(theta: &[f64], anchor: &[f64]) -> Result<TermResiduals, EnergyError> {
    if anchor.len() != theta.len() {
        return Err(EnergyError::DimensionMismatch { expected: theta.len(), got: anchor.len() });
    }
    let r = DVector::from_iterator(theta.len(), theta.iter().zip(anchor).map(|(a, b)| a - b));
    Ok(TermResiduals { r, j: DMatrix::identity(theta.len(), theta.len()) })
}

impl EnergyTerm {
    pub fn residuals(&self, eval: &Evaluation) -> Result<TermResiduals, EnergyError> {
        if self.weight < 0.0 {
            return Err(EnergyError::NegativeWeight(self.weight));
        }
        let theta = eval.theta.as_slice();
        let dim = theta.len();
        match &self.kind {
            TermKind::Drag { handle, target, theta_prev, lambda } => {
                let p = handle_point(&eval.layout, *handle)?;
                if theta_prev.len() != dim {
                    return Err(EnergyError::DimensionMismatch { expected: dim, got: theta_prev.len() });
                }
                let reg = *lambda > 0.0;
                let rows = 2 + if reg { dim } else { 0 };
                let mut r = DVector::zeros(rows);
                let mut j = DMatrix::zeros(rows, dim);
                r[0] = p.x - target.x;
                r[1] = p.y - target.y;
                j.rows_mut(0, 2).copy_from(&handle_jacobian(eval, *handle));
                if reg {
                    let s = lambda.sqrt();
                    for c in 0..dim {
                        r[2 + c] = s * (theta[c] - theta_prev[c]);
                        j[(2 + c, c)] = s;
                    }
                }
                Ok(TermResiduals { r, j })
            }
            TermKind::Constraint { kind, handles, targets, units_per_em } => {
                let mut pts = Vec::with_capacity(handles.len());
                let mut jacs = Vec::with_capacity(handles.len());
                for &h in handles {
                    pts.push(handle_point(&eval.layout, h)?);
                    jacs.push(handle_jacobian(eval, h));
                }
                constraint_residuals(*kind, &pts, &jacs, targets, *units_per_em, dim)
            }
            TermKind::Collision { scene, density } => Ok(collision_residuals(eval, scene, *density)),
            TermKind::Elastic { rest } => difference_term(theta, rest),
            TermKind::Kinetic { predicted } => difference_term(theta, predicted),
            TermKind::Image { target, config } => {
                let image = rasterize(&eval.layout, config);
                let r = DVector::from_iterator(
                    image.values.len(),
                    image.values.iter().zip(&target.values).map(|(a, b)| a - b),
                );
                Ok(TermResiduals { r, j: image_residual_jacobian(&eval.layout, &eval.jacobian, config) })
            }
        }
    }

    pub fn value(&self, eval: &Evaluation) -> Result<f64, EnergyError> {
        Ok(self.weight * self.residuals(eval)?.r.norm_squared())
    }
}

fn constraint_residuals(
    kind: ConstraintKind,
    pts: &[Point],
    jacs: &[DMatrix<f64>],
    targets: &[Point],
    upem: f64,
    dim: usize,
) -> Result<TermResiduals, EnergyError> {
    let n = pts.len();
    let row = |m: &DMatrix<f64>, k: usize| m.row(k).into_owned();
    let (r, rows): (Vec<f64>, Vec<_>) = match kind {
        ConstraintKind::Pin => (0..n)
            .flat_map(|i| {
                [
                    (pts[i].x - targets[i].x, row(&jacs[i], 0)),
                    (pts[i].y - targets[i].y, row(&jacs[i], 1)),
                ]
            })
            .unzip(),
        ConstraintKind::SameX | ConstraintKind::SameY => {
            let k = if kind == ConstraintKind::SameX { 0 } else { 1 };
            (0..n - 1)
                .map(|i| {
                    let (a, b) = if k == 0 { (pts[i].x, pts[i + 1].x) } else { (pts[i].y, pts[i + 1].y) };
                    (a - b, row(&jacs[i], k) - row(&jacs[i + 1], k))
                })
                .unzip()
        }
        ConstraintKind::Collinear => (0..n - 2)
            .map(|i| {
                let (a, b, c) = (pts[i], pts[i + 1], pts[i + 2]);
                let (u, v) = (b - a, c - a);
                let value = u.cross(v) / upem;
                // d(u x v) = du.x v.y + u.x dv.y - du.y v.x - u.y dv.x
                let (ja, jb, jc) = (&jacs[i], &jacs[i + 1], &jacs[i + 2]);
                let dux = row(jb, 0) - row(ja, 0);
                let duy = row(jb, 1) - row(ja, 1);
                let dvx = row(jc, 0) - row(ja, 0);
                let dvy = row(jc, 1) - row(ja, 1);
                let grad = (dux * v.y + dvy * u.x - duy * v.x - dvx * u.y) / upem;
                (value, grad)
            })
            .unzip(),
    };
    let mut j = DMatrix::zeros(r.len(), dim);
    for (i, g) in rows.iter().enumerate() {
        j.row_mut(i).copy_from(g);
    }
    Ok(TermResiduals { r: DVector::from_vec(r), j })
}

/// One residual slot per sample for static contacts, plus one per sample for
/// glyph contacts when pairwise detection is on, so the residual length does
/// not depend on the contact set. Each slot holds the deepest contact.
fn collision_residuals(eval: &Evaluation, scene: &ColliderScene, density: usize) -> TermResiduals {
    let layout = &eval.layout;
    let samples = sample_outline(layout, density);
    let count = samples.len();
    let slots = if scene.pairwise { 2 * count } else { count };
    let dim = eval.jacobian.ncols();
    let mut r = DVector::zeros(slots);
    let mut j = DMatrix::zeros(slots, dim);
    let mut contacts = detect_static(&samples, scene).contacts;
    if scene.pairwise {
        for a in 0..layout.glyph_count() {
            for b in 0..layout.glyph_count() {
                if a != b {
                    contacts.extend(detect_pairwise(&samples, layout, a, b).contacts);
                }
            }
        }
    }
    for c in &contacts {
        let glyph_contact = matches!(c.source, ContactSource::Glyph { .. });
        let slot = c.sample + if glyph_contact { count } else { 0 };
        let pen = c.penetration();
        if pen <= r[slot] {
            continue;
        }
        r[slot] = pen;
        let s = samples.samples[c.sample];
        let jp = curve_point_jacobian(&eval.jacobian, &layout.segments()[s.segment], s.t);
        let mut rel = jp;
        if let ContactSource::Glyph { segment, t, .. } = c.source {
            rel -= curve_point_jacobian(&eval.jacobian, &layout.segments()[segment], t);
        }
        let g = -(rel.row(0) * c.normal.x + rel.row(1) * c.normal.y);
        j.row_mut(slot).copy_from(&g);
    }
    TermResiduals { r, j }
}

/// Terms evaluated in declaration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompositeEnergy {
    pub terms: Vec<EnergyTerm>,
}

#[derive(Clone, Debug)]
pub struct CompositeResiduals {
    /// Concatenation of `sqrt(weight) * r` over terms.
    pub residual: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub term_values: Vec<f64>,
    /// Sum of `term_values`.
    pub value: f64,
}

impl CompositeEnergy {
    pub fn new(terms: Vec<EnergyTerm>) -> CompositeEnergy {
        CompositeEnergy { terms }
    }

    pub fn push(&mut self, term: EnergyTerm) {
        self.terms.push(term);
    }

    pub fn evaluate(&self, eval: &Evaluation) -> Result<CompositeResiduals, EnergyError> {
        let dim = eval.theta.as_slice().len();
        let parts: Vec<TermResiduals> = self.terms.iter().map(|t| t.residuals(eval)).collect::<Result<_, _>>()?;
        let rows: usize = parts.iter().map(|p| p.r.len()).sum();
        let mut residual = DVector::zeros(rows);
        let mut jacobian = DMatrix::zeros(rows, dim);
        let mut term_values = Vec::with_capacity(parts.len());
        let mut at = 0;
        for (term, part) in self.terms.iter().zip(&parts) {
            let s = term.weight.sqrt();
            let m = part.r.len();
            residual.rows_mut(at, m).copy_from(&(&part.r * s));
            jacobian.rows_mut(at, m).copy_from(&(&part.j * s));
            term_values.push(term.weight * part.r.norm_squared());
            at += m;
        }
        let value = term_values.iter().sum();
        Ok(CompositeResiduals { residual, jacobian, term_values, value })
    }
}

/// A composite energy bound to a word of a font.
pub struct WordObjective<'a> {
    pub font: &'a FontModel,
    pub glyphs: &'a [GlyphId],
    pub energy: &'a CompositeEnergy,
}

impl WordObjective<'_> {
    pub fn evaluation(&self, theta: &[f64]) -> Result<Evaluation, InterpError> {
        let t = WordTheta::from_flat(self.font.axis_count(), theta.to_vec())?;
        evaluate_word(self.font, self.glyphs, &t)
    }
}

impl Objective for WordObjective<'_> {
    fn dim(&self) -> usize {
        self.font.axis_count() * self.glyphs.len()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Residuals, SolveError> {
        let eval = self.evaluation(theta)?;
        let c = self.energy.evaluate(&eval)?;
        Ok(Residuals { values: c.residual, jacobian: c.jacobian, energy: c.value })
    }
}

/// Nearest outline point within `radius` of `p`; ties go to the lowest segment.
pub fn pick_handle(layout: &WordLayout, p: Point, radius: f64) -> Option<(Handle, f64)> {
    let mut best: Option<(Handle, f64)> = None;
    for s in 0..layout.segments().len() {
        let Ok((t, q, _)) = nearest_on_cubic(p, &layout.segment_controls(s)) else { continue };
        let d = q.distance(p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((Handle { segment: s, t }, d));
        }
    }
    best.filter(|&(_, d)| d < radius)
}
