//! Per-session editing state and the synchronous message handlers.

use std::collections::BTreeMap;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Instant;

use serde::Deserialize;
use serde_json::{json, Value};
use vfgrad_core::collide::{max_penetration, segment_owners, ColliderScene, DEFAULT_DENSITY};
use vfgrad_core::energy::{
    collision_energy, constraint_energy, drag_energy, handle_point, pick_handle, CompositeEnergy, ConstraintKind,
    Handle, WordObjective, DEFAULT_DRAG_LAMBDA,
};
use vfgrad_core::font::{FontModel, GlyphId, Tag};
use vfgrad_core::geom::Point;
use vfgrad_core::interp::{denormalize_axis, layout_word, normalize_axis, Curves, WordLayout, WordTheta};
use vfgrad_core::sim::{self, SimScript, SimState};
use vfgrad_core::solve::{solve_lm_with, Convergence, SolveControl, SolverConfig};

use crate::protocol::ProtocolError;

pub const DEFAULT_DRAG_ITERATIONS: usize = 15;
pub const DEFAULT_PICK_RADIUS_EM: f64 = 0.04;

/// A font the server was started with, addressed by name.
#[derive(Clone)]
pub struct FontEntry {
    pub name: String,
    pub model: Arc<FontModel>,
}

#[derive(Clone, Debug)]
pub struct ActiveConstraint {
    pub id: u64,
    pub kind: ConstraintKind,
    pub handles: Vec<Handle>,
    pub targets: Vec<Point>,
}

struct Playback {
    script: SimScript,
    state: SimState,
    frame: usize,
}

pub struct Session {
    pub id: String,
    font_name: String,
    font: Arc<FontModel>,
    text: String,
    glyphs: Vec<GlyphId>,
    theta: WordTheta,
    theta_prev: Vec<f64>,
    constraints: Vec<ActiveConstraint>,
    next_constraint: u64,
    collision: bool,
    scene: ColliderScene,
    pub lambda: f64,
    pub config: SolverConfig,
    pub pick_radius_em: f64,
    sim: Option<Playback>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextPayload {
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxesPayload {
    axes: BTreeMap<String, f64>,
    #[serde(default)]
    glyph: Option<usize>,
    #[serde(default)]
    normalized: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PickPayload {
    x: f64,
    y: f64,
    #[serde(default)]
    radius: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HandlePayload {
    segment: usize,
    t: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DragPayload {
    segment: usize,
    t: f64,
    x: f64,
    y: f64,
    #[serde(default)]
    iterations: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintPayload {
    kind: String,
    handles: Vec<HandlePayload>,
    #[serde(default)]
    targets: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RemovePayload {
    id: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionPayload {
    enabled: bool,
    #[serde(default)]
    scene: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepPayload {
    #[serde(default)]
    script: Option<String>,
}

fn payload<T: for<'de> Deserialize<'de>>(value: &Value) -> Result<T, ProtocolError> {
    let v = if value.is_null() { json!({}) } else { value.clone() };
    serde_json::from_value(v).map_err(|e| ProtocolError::BadPayload(e.to_string()))
}

fn finite(values: &[f64]) -> Result<(), ProtocolError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ProtocolError::BadPayload("coordinates must be finite".into()))
    }
}

fn pt(p: Point) -> Value {
    json!([p.x, p.y])
}

impl Session {
    pub fn new(id: String, font: &FontEntry) -> Session {
        let axes = font.model.axis_count();
        Session {
            id,
            font_name: font.name.clone(),
            font: font.model.clone(),
            text: String::new(),
            glyphs: Vec::new(),
            theta: WordTheta::zeros(axes, 0),
            theta_prev: Vec::new(),
            constraints: Vec::new(),
            next_constraint: 1,
            collision: false,
            scene: ColliderScene::default(),
            lambda: DEFAULT_DRAG_LAMBDA,
            config: SolverConfig::default().with_max_iterations(DEFAULT_DRAG_ITERATIONS),
            pick_radius_em: DEFAULT_PICK_RADIUS_EM,
            sim: None,
        }
    }

    pub fn theta(&self) -> &WordTheta {
        &self.theta
    }

    pub fn theta_prev(&self) -> &[f64] {
        &self.theta_prev
    }

    fn layout(&self) -> Option<WordLayout> {
        if self.glyphs.is_empty() {
            return None;
        }
        layout_word(&self.font, &self.glyphs, &self.theta).ok()
    }

    fn require_layout(&self) -> Result<WordLayout, ProtocolError> {
        self.layout().ok_or_else(|| ProtocolError::Invalid("session has no text".into()))
    }

    fn check_handle(&self, layout: &WordLayout, segment: usize, t: f64) -> Result<Handle, ProtocolError> {
        if segment >= layout.segments().len() {
            return Err(ProtocolError::Invalid(format!(
                "segment {segment} out of range ({} segments)",
                layout.segments().len()
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(ProtocolError::Invalid(format!("t = {t} outside [0, 1]")));
        }
        Ok(Handle { segment, t })
    }

    pub fn set_text(&mut self, value: &Value) -> Result<Value, ProtocolError> {
        let p: TextPayload = payload(value)?;
        let glyphs = self.font.glyphs_for_text(&p.text).map_err(|missing| {
            let list: Vec<String> = missing.iter().map(|c| format!("U+{c:04X}")).collect();
            ProtocolError::Invalid(format!("missing glyphs for {}", list.join(", ")))
        })?;
        let n = self.font.axis_count();
        let mut values = vec![0.0; n * glyphs.len()];
        let keep = self.theta.as_slice().len().min(values.len());
        values[..keep].copy_from_slice(&self.theta.as_slice()[..keep]);
        self.theta = WordTheta::from_flat(n, values).expect("sized above");
        self.theta_prev = self.theta.as_slice().to_vec();
        self.text = p.text;
        self.glyphs = glyphs;
        self.constraints.clear();
        self.sim = None;
        Ok(self.state())
    }

    pub fn set_axes(&mut self, value: &Value) -> Result<Value, ProtocolError> {
        let p: AxesPayload = payload(value)?;
        let n = self.font.axis_count();
        let count = self.glyphs.len();
        if let Some(j) = p.glyph {
            if j >= count {
                return Err(ProtocolError::Invalid(format!("glyph {j} out of range ({count} glyphs)")));
            }
        }
        let mut updates = Vec::new();
        for (tag, &v) in &p.axes {
            let parsed: Tag = tag.parse().map_err(ProtocolError::Invalid)?;
            let a = self.font.axis_index(parsed).ok_or_else(|| ProtocolError::Invalid(format!("unknown axis {tag:?}")))?;
            finite(&[v])?;
            let w = if p.normalized {
                v.clamp(-1.0, 1.0)
            } else {
                normalize_axis(&self.font.axes[a], v).map_err(|e| ProtocolError::Invalid(e.to_string()))?
            };
            updates.push((a, w));
        }
        let targets: Vec<usize> = match p.glyph {
            Some(j) => vec![j],
            None => (0..count).collect(),
        };
        let values = self.theta.as_mut_slice();
        for j in targets {
            for &(a, w) in &updates {
                values[j * n + a] = w;
            }
        }
        self.theta_prev = self.theta.as_slice().to_vec();
        Ok(self.state())
    }

    pub fn pick(&self, value: &Value) -> Result<Value, ProtocolError> {
        let p: PickPayload = payload(value)?;
        finite(&[p.x, p.y])?;
        let upem = self.font.units_per_em as f64;
        let radius = p.radius.unwrap_or(self.pick_radius_em * upem);
        let hit = self.layout().and_then(|l| pick_handle(&l, Point::new(p.x, p.y), radius).map(|h| (h, l)));
        Ok(match hit {
            Some(((handle, distance), layout)) => {
                let point = handle_point(&layout, handle).expect("picked handle is valid");
                json!({
                    "handle": {"segment": handle.segment, "t": handle.t},
                    "glyph": layout.segment_glyph(handle.segment),
                    "point": pt(point),
                    "distance": distance,
                })
            }
            None => json!({"handle": null, "reason": "no_handle"}),
        })
    }

    fn energy(&self, drag: Option<(Handle, Point)>) -> Result<CompositeEnergy, ProtocolError> {
        let upem = self.font.units_per_em as f64;
        let mut energy = CompositeEnergy::default();
        if let Some((handle, target)) = drag {
            energy.push(drag_energy(handle, target, self.theta_prev.clone(), self.lambda));
        }
        for c in &self.constraints {
            let term = constraint_energy(c.kind, c.handles.clone(), c.targets.clone(), upem)
                .map_err(|e| ProtocolError::Invalid(e.to_string()))?;
            energy.push(term);
        }
        if self.collision {
            energy.push(collision_energy(self.scene.clone(), DEFAULT_DENSITY));
        }
        Ok(energy)
    }

    /// Runs one interactive drag solve and commits its result.
    pub fn drag(&mut self, value: &Value, cancel: Option<&AtomicBool>) -> Result<Value, ProtocolError> {
        let p: DragPayload = payload(value)?;
        finite(&[p.x, p.y, p.t])?;
        let layout = self.require_layout()?;
        let handle = self.check_handle(&layout, p.segment, p.t)?;
        let target = Point::new(p.x, p.y);
        let energy = self.energy(Some((handle, target)))?;
        let objective = WordObjective { font: &self.font, glyphs: &self.glyphs, energy: &energy };
        let mut config = self.config.clone();
        if let Some(n) = p.iterations {
            config.max_iterations = n.min(1000);
        }
        let started = Instant::now();
        let mut control = SolveControl { cancel, observer: None };
        let result = solve_lm_with(&objective, self.theta.as_slice(), &config, &mut control)
            .map_err(|e| ProtocolError::Solver(e.to_string()))?;
        let elapsed = started.elapsed().as_secs_f64() * 1e3;
        self.theta = WordTheta::from_flat(self.font.axis_count(), result.theta).expect("solver keeps the dimension");
        self.theta_prev = self.theta.as_slice().to_vec();
        let layout = self.require_layout()?;
        let reached = handle_point(&layout, handle).expect("validated handle");
        let mut state = self.state();
        state["drag"] = json!({
            "iterations": result.iterations,
            "reason": result.reason.as_str(),
            "cancelled": result.reason == Convergence::Cancelled,
            "energy": result.energy,
            "residual": reached.distance(target),
            "point": pt(reached),
            "elapsed_ms": elapsed,
        });
        Ok(state)
    }

    pub fn add_constraint(&mut self, value: &Value) -> Result<Value, ProtocolError> {
        let p: ConstraintPayload = payload(value)?;
        let kind: ConstraintKind = p.kind.parse().map_err(|e: String| ProtocolError::Invalid(e))?;
        let layout = self.require_layout()?;
        let handles =
            p.handles.iter().map(|h| self.check_handle(&layout, h.segment, h.t)).collect::<Result<Vec<_>, _>>()?;
        let targets: Vec<Point> = if kind == ConstraintKind::Pin && p.targets.is_empty() {
            handles.iter().map(|&h| handle_point(&layout, h).expect("validated handle")).collect()
        } else {
            p.targets.iter().map(|&[x, y]| Point::new(x, y)).collect()
        };
        finite(&targets.iter().flat_map(|p| [p.x, p.y]).collect::<Vec<_>>())?;
        constraint_energy(kind, handles.clone(), targets.clone(), self.font.units_per_em as f64)
            .map_err(|e| ProtocolError::Invalid(e.to_string()))?;
        let id = self.next_constraint;
        self.next_constraint += 1;
        self.constraints.push(ActiveConstraint { id, kind, handles, targets });
        Ok(self.state())
    }

    pub fn remove_constraint(&mut self, value: &Value) -> Result<Value, ProtocolError> {
        let p: RemovePayload = payload(value)?;
        let before = self.constraints.len();
        self.constraints.retain(|c| c.id != p.id);
        if self.constraints.len() == before {
            return Err(ProtocolError::Invalid(format!("no constraint with id {}", p.id)));
        }
        Ok(self.state())
    }

    pub fn set_collision(&mut self, value: &Value) -> Result<Value, ProtocolError> {
        let p: CollisionPayload = payload(value)?;
        if let Some(text) = &p.scene {
            self.scene = text.parse().map_err(|e: vfgrad_core::collide::CollisionError| ProtocolError::Invalid(e.to_string()))?;
        }
        self.collision = p.enabled;
        Ok(self.state())
    }

    pub fn step_sim(&mut self, value: &Value) -> Result<Value, ProtocolError> {
        let p: StepPayload = payload(value)?;
        if self.glyphs.is_empty() {
            return Err(ProtocolError::Invalid("session has no text".into()));
        }
        let dim = self.theta.as_slice().len();
        if let Some(text) = &p.script {
            let mut script: SimScript = text.parse().map_err(|e: sim::SimError| ProtocolError::Invalid(e.to_string()))?;
            if script.scene.is_empty() && self.collision {
                script.scene = self.scene.clone();
            }
            script.validate(dim).map_err(|e| ProtocolError::Invalid(e.to_string()))?;
            self.sim = Some(Playback { script, state: SimState::at_rest(self.theta.clone()), frame: 0 });
        }
        let Some(play) = self.sim.as_mut() else {
            return Err(ProtocolError::Invalid("no simulation script loaded".into()));
        };
        let config = SolverConfig::default();
        let next = sim::step(&self.font, &self.glyphs, &play.state, &play.script, play.frame + 1, &config)
            .map_err(|e| ProtocolError::Solver(e.to_string()))?;
        play.state = next;
        play.frame += 1;
        let (frame, time, scene, density) = (play.frame, play.state.time, play.script.scene.clone(), play.script.density);
        let velocity = play.state.velocity.clone();
        self.theta = play.state.theta.clone();
        self.theta_prev = self.theta.as_slice().to_vec();
        let layout = self.require_layout()?;
        let mut state = self.state();
        state["sim"] = json!({
            "frame": frame,
            "time": time,
            "velocity": velocity,
            "max_penetration": max_penetration(&layout, &scene, density),
        });
        Ok(state)
    }

    /// Full geometry and weights. Segment indices here are the ones pick and
    /// drag refer to.
    pub fn state(&self) -> Value {
        let n = self.font.axis_count();
        let axes: Vec<Value> = self
            .font
            .axes
            .iter()
            .map(|a| json!({"tag": a.tag.to_string(), "min": a.min, "default": a.default, "max": a.max}))
            .collect();
        let normalized: Vec<Vec<f64>> = (0..self.glyphs.len()).map(|j| self.theta.glyph(j).to_vec()).collect();
        let design: Vec<Vec<f64>> = normalized
            .iter()
            .map(|w| {
                w.iter()
                    .zip(&self.font.axes)
                    .map(|(&v, a)| denormalize_axis(a, v).unwrap_or(a.default))
                    .collect()
            })
            .collect();
        let mut glyphs = Vec::new();
        let mut segments = Vec::new();
        if let Some(layout) = self.layout() {
            for j in 0..layout.glyph_count() {
                glyphs.push(json!({
                    "glyph": self.glyphs[j].0,
                    "offset": pt(layout.offsets[j]),
                }));
            }
            let owners = segment_owners(&layout);
            for (s, &(glyph, contour, closed)) in owners.iter().enumerate() {
                let c = layout.segment_controls(s);
                segments.push(json!({
                    "glyph": glyph,
                    "contour": contour,
                    "closed": closed,
                    "controls": c.iter().map(|&p| pt(p)).collect::<Vec<_>>(),
                }));
            }
        }
        let constraints: Vec<Value> = self
            .constraints
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "kind": c.kind.to_string(),
                    "handles": c.handles.iter().map(|h| json!({"segment": h.segment, "t": h.t})).collect::<Vec<_>>(),
                    "targets": c.targets.iter().map(|&p| pt(p)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "font": self.font_name,
            "units_per_em": self.font.units_per_em,
            "text": self.text,
            "axes": axes,
            "axis_count": n,
            "theta": normalized,
            "design": design,
            "glyphs": glyphs,
            "segments": segments,
            "constraints": constraints,
            "collision": {"enabled": self.collision, "walls": self.scene.walls.len(), "polygons": self.scene.polygons.len(), "pairwise": self.scene.pairwise},
        })
    }
}
