//! Kinetic typography in axis space: one damped least-squares solve per step
//! over elastic, kinetic and collision energies.

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::collide::{max_penetration, ColliderScene, CollisionError, DEFAULT_DENSITY};
use crate::energy::{collision_energy, elastic_energy, kinetic_energy, CompositeEnergy, WordObjective};
use crate::font::{FontModel, GlyphId};
use crate::interp::{export_svg, layout_word, SvgOptions, WordTheta};
use crate::solve::{project_bounds, solve_lm, SolveError, SolverConfig};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("script line {line}: {reason}")]
    Script { line: usize, reason: String },
    #[error("script: {0}")]
    Invalid(String),
    #[error("frame {frame}: {source}")]
    Step { frame: usize, source: SolveError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CollisionError> for SimError {
    fn from(e: CollisionError) -> Self {
        match e {
            CollisionError::Scene { line, reason } => SimError::Script { line, reason },
            other => SimError::Invalid(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub theta: WordTheta,
    pub velocity: Vec<f64>,
    pub time: f64,
}

impl SimState {
    pub fn at_rest(theta: WordTheta) -> SimState {
        let velocity = vec![0.0; theta.as_slice().len()];
        SimState { theta, velocity, time: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimScript {
    pub dt: f64,
    pub steps: usize,
    pub stiffness: f64,
    pub mass: f64,
    /// Rest-pose keyframes `(time, theta)`, held until the next keyframe.
    pub rest: Vec<(f64, Vec<f64>)>,
    /// Velocity impulses `(time, delta v)`.
    pub impulses: Vec<(f64, Vec<f64>)>,
    pub scene: ColliderScene,
    pub density: usize,
}

impl Default for SimScript {
    fn default() -> Self {
        SimScript {
            dt: 1.0 / 60.0,
            steps: 0,
            stiffness: 1.0,
            mass: 1.0,
            rest: Vec::new(),
            impulses: Vec::new(),
            scene: ColliderScene::default(),
            density: DEFAULT_DENSITY,
        }
    }
}

impl SimScript {
    /// Checks the script against a weight vector of length `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.stiffness < 0.0 || self.mass <= 0.0 {
            return bad("stiffness must be >= 0 and mass > 0".into());
        }
        if self.rest.windows(2).any(|w| w[1].0 < w[0].0) {
            return bad("rest keyframe times must be non-decreasing".into());
        }
        for (t, v) in self.rest.iter().chain(&self.impulses) {
            if v.len() != dim {
                return bad(format!("keyframe at t={t} has {} values, expected {dim}", v.len()));
            }
        }
        Ok(())
    }

    /// Rest pose in effect at `time`: the latest keyframe not after it, else
    /// the first keyframe, else the default instance.
    pub fn rest_at(&self, time: f64, dim: usize) -> Vec<f64> {
        let eps = 1e-9 * self.dt;
        self.rest
            .iter()
            .rev()
            .find(|(t, _)| *t <= time + eps)
            .or(self.rest.first())
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| vec![0.0; dim])
    }

    /// Sum of impulses falling in the step `[time, time + dt)`.
    pub fn impulse_at(&self, time: f64, dim: usize) -> Vec<f64> {
        let eps = 1e-9 * self.dt;
        let mut dv = vec![0.0; dim];
        for (t, v) in &self.impulses {
            if *t >= time - eps && *t < time + self.dt - eps {
                for (a, b) in dv.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
        dv
    }

    /// Weight of the kinetic term.
    pub fn kinetic_weight(&self) -> f64 {
        self.mass / (self.dt * self.dt)
    }
}

fn numbers(words: std::str::SplitWhitespace, line: usize) -> Result<Vec<f64>, SimError> {
    words
        .map(|w| w.parse::<f64>().map_err(|_| SimError::Script { line, reason: format!("bad number {w:?}") }))
        .collect()
}

/// Plain-text script: `dt`, `steps`, `stiffness`, `mass`, `density`,
/// `rest t theta...`, `impulse t dv...` and scene lines (`wall`, `poly`,
/// `pairwise`). `#` starts a comment.
impl FromStr for SimScript {
    type Err = SimError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut script = SimScript::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || script.scene.parse_line(line, n)? {
                continue;
            }
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or("");
            let v = numbers(words, n)?;
            let one = |v: &[f64]| match v {
                [x] => Ok(*x),
                _ => Err(SimError::Script { line: n, reason: format!("{key} takes one value") }),
            };
            match key {
                "dt" => script.dt = one(&v)?,
                "steps" => script.steps = one(&v)? as usize,
                "stiffness" => script.stiffness = one(&v)?,
                "mass" => script.mass = one(&v)?,
                "density" => script.density = one(&v)? as usize,
                "rest" | "impulse" => {
                    let Some((&t, rest)) = v.split_first() else {
                        return Err(SimError::Script { line: n, reason: format!("{key} needs a time") });
                    };
                    let list = if key == "rest" { &mut script.rest } else { &mut script.impulses };
                    list.push((t, rest.to_vec()));
                }
                other => return Err(SimError::Script { line: n, reason: format!("unknown keyword {other:?}") }),
            }
        }
        Ok(script)
    }
}

/// Inertial prediction `clamp(theta + dt (v + dv))`.
pub fn predict(state: &SimState, dt: f64, impulse: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = state
        .theta
        .as_slice()
        .iter()
        .zip(&state.velocity)
        .zip(impulse)
        .map(|((t, v), dv)| t + dt * (v + dv))
        .collect();
    project_bounds(&raw)
}

/// Energy minimized by one step at `rest` with prediction `predicted`.
pub fn step_energy(script: &SimScript, rest: Vec<f64>, predicted: Vec<f64>) -> CompositeEnergy {
    let mut energy = CompositeEnergy::new(vec![
        elastic_energy(rest, script.stiffness),
        kinetic_energy(predicted, script.kinetic_weight()),
    ]);
    if !script.scene.is_empty() {
        energy.push(collision_energy(script.scene.clone(), script.density));
    }
    energy
}

/// Advances one step. The solve starts from the prediction.
pub fn step(
    font: &FontModel,
    glyphs: &[GlyphId],
    state: &SimState,
    script: &SimScript,
    t_index: usize,
    config: &SolverConfig,
) -> Result<SimState, SimError> {
    let dim = state.theta.as_slice().len();
    let impulse = script.impulse_at(state.time, dim);
    let predicted = predict(state, script.dt, &impulse);
    let energy = step_energy(script, script.rest_at(state.time, dim), predicted.clone());
    let objective = WordObjective { font, glyphs, energy: &energy };
    let result = solve_lm(&objective, &predicted, config).map_err(|source| SimError::Step { frame: t_index, source })?;
    let velocity = result.theta.iter().zip(state.theta.as_slice()).map(|(a, b)| (a - b) / script.dt).collect();
    let theta = WordTheta::from_flat(state.theta.axis_count(), result.theta)
        .map_err(|e| SimError::Step { frame: t_index, source: e.into() })?;
    Ok(SimState { theta, velocity, time: state.time + script.dt })
}

/// The initial state followed by one state per step.
pub fn run(
    font: &FontModel,
    glyphs: &[GlyphId],
    script: &SimScript,
    initial: SimState,
    config: &SolverConfig,
) -> Result<Vec<SimState>, SimError> {
    script.validate(initial.theta.as_slice().len())?;
    let mut trajectory = Vec::with_capacity(script.steps + 1);
    trajectory.push(initial);
    for i in 0..script.steps {
        let next = step(font, glyphs, trajectory.last().unwrap(), script, i + 1, config)?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:05}.svg")
}

/// Writes one SVG per state and returns the number of files written.
pub fn export_frames(font: &FontModel, glyphs: &[GlyphId], trajectory: &[SimState], dir: &Path) -> Result<usize, SimError> {
    std::fs::create_dir_all(dir)?;
    let options = SvgOptions::new(font.units_per_em);
    for (i, state) in trajectory.iter().enumerate() {
        let layout = layout_word(font, glyphs, &state.theta).map_err(|e| SimError::Invalid(e.to_string()))?;
        std::fs::write(dir.join(frame_name(i)), export_svg(&layout, &options))?;
    }
    Ok(trajectory.len())
}

/// Worst penetration over every state of a trajectory.
pub fn trajectory_penetration(font: &FontModel, glyphs: &[GlyphId], trajectory: &[SimState], script: &SimScript) -> f64 {
    trajectory
        .iter()
        .filter_map(|s| layout_word(font, glyphs, &s.theta).ok())
        .map(|l| max_penetration(&l, &script.scene, script.density))
        .fold(0.0, f64::max)
}
