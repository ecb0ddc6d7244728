//! Box-constrained Levenberg-Marquardt and Adam over `[-1, 1]^d`.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::energy::EnergyError;
use crate::interp::InterpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("normal equations stayed singular up to damping {damping:e}")]
    SingularNormalEquations { damping: f64 },
    #[error("non-finite residual at iteration {iteration}")]
    NonFiniteResidual { iteration: usize },
    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },
    #[error("objective has dimension {expected}, start point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance_grad: f64,
    pub tolerance_step: f64,
    pub lm_damping_init: f64,
    pub lm_damping_up: f64,
    pub lm_damping_down: f64,
    pub adam_lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

/// Damping above which LM gives up on a step.
pub const MAX_DAMPING: f64 = 1e8;

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 100,
            tolerance_grad: 1e-8,
            tolerance_step: 1e-10,
            lm_damping_init: 1e-3,
            lm_damping_up: 10.0,
            lm_damping_down: 0.5,
            adam_lr: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        if !(self.tolerance_grad > 0.0 && self.tolerance_step > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.lm_damping_init > 0.0 && self.lm_damping_up > 1.0) {
            return bad("lm_damping_init must be positive and lm_damping_up > 1");
        }
        if !(self.lm_damping_down > 0.0 && self.lm_damping_down < 1.0) {
            return bad("lm_damping_down must lie in (0, 1)");
        }
        let beta = |b: f64| b > 0.0 && b < 1.0;
        if !(beta(self.adam_beta1) && beta(self.adam_beta2)) {
            return bad("adam betas must lie in (0, 1)");
        }
        if !(self.adam_lr > 0.0 && self.adam_eps > 0.0) {
            return bad("adam_lr and adam_eps must be positive");
        }
        Ok(())
    }

    /// Sets one field from its key; used by the key-value file format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SolveError> {
        let bad = || SolveError::InvalidConfig(format!("bad value {value:?} for {key}"));
        let f = || value.parse::<f64>().map_err(|_| bad());
        match key {
            "max_iterations" => self.max_iterations = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "tolerance_grad" => self.tolerance_grad = f()?,
            "tolerance_step" => self.tolerance_step = f()?,
            "lm_damping_init" => self.lm_damping_init = f()?,
            "lm_damping_up" => self.lm_damping_up = f()?,
            "lm_damping_down" => self.lm_damping_down = f()?,
            "adam_lr" => self.adam_lr = f()?,
            "adam_beta1" => self.adam_beta1 = f()?,
            "adam_beta2" => self.adam_beta2 = f()?,
            "adam_eps" => self.adam_eps = f()?,
            _ => return Err(SolveError::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "max_iterations = {}\ntolerance_grad = {:e}\ntolerance_step = {:e}\nlm_damping_init = {:e}\n\
             lm_damping_up = {}\nlm_damping_down = {}\nadam_lr = {}\nadam_beta1 = {}\nadam_beta2 = {}\n\
             adam_eps = {:e}\nseed = {}\n",
            self.max_iterations,
            self.tolerance_grad,
            self.tolerance_step,
            self.lm_damping_init,
            self.lm_damping_up,
            self.lm_damping_down,
            self.adam_lr,
            self.adam_beta1,
            self.adam_beta2,
            self.adam_eps,
            self.seed
        )
    }
}

/// `key = value` lines; `#` starts a comment. Unset keys keep their defaults.
impl FromStr for SolverConfig {
    type Err = SolveError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut config = SolverConfig::default();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SolveError::InvalidConfig(format!("expected key = value, got {line:?}")))?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Weighted residuals with their Jacobian and the energy they sum to.
#[derive(Clone, Debug)]
pub struct Residuals {
    pub values: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub energy: f64,
}

impl Residuals {
    pub fn new(values: DVector<f64>, jacobian: DMatrix<f64>) -> Residuals {
        let energy = values.norm_squared();
        Residuals { values, jacobian, energy }
    }
}

pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&self, theta: &[f64]) -> Result<Residuals, SolveError>;
}

/// Objective from a closure, mostly for tests and small problems.
pub struct FnObjective<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>)> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Residuals, SolveError> {
        let (r, j) = (self.f)(theta);
        Ok(Residuals::new(r, j))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Grad,
    Step,
    MaxIter,
    Cancelled,
}

impl Convergence {
    pub fn as_str(self) -> &'static str {
        match self {
            Convergence::Grad => "grad",
            Convergence::Step => "step",
            Convergence::MaxIter => "max_iter",
            Convergence::Cancelled => "cancelled",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub damping: f64,
    pub step_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub energy: f64,
    pub reason: Convergence,
    /// Row 0 is the start point; one row per iteration after that.
    pub trace: Vec<TraceRow>,
}

impl SolverResult {
    pub fn trace_csv(&self) -> String {
        trace_csv(&self.trace)
    }
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,energy,damping,step_norm\n");
    for r in trace {
        let _ = writeln!(out, "{},{:e},{:e},{:e}", r.iteration, r.energy, r.damping, r.step_norm);
    }
    out
}

/// Cancellation flag and an observer called with every iterate.
#[derive(Default)]
pub struct SolveControl<'a> {
    pub cancel: Option<&'a AtomicBool>,
    pub observer: Option<&'a mut dyn FnMut(&[f64])>,
}

impl SolveControl<'_> {
    fn cancelled(&self) -> bool {
        self.cancel.is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn observe(&mut self, theta: &[f64]) {
        if let Some(f) = self.observer.as_mut() {
            f(theta);
        }
    }
}

pub fn project_bounds(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) }).collect()
}

fn checked_eval(obj: &dyn Objective, theta: &[f64], iteration: usize) -> Result<Residuals, SolveError> {
    let r = obj.evaluate(theta)?;
    if !r.energy.is_finite() || r.values.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteResidual { iteration });
    }
    Ok(r)
}

fn start(obj: &dyn Objective, theta0: &[f64], config: &SolverConfig) -> Result<Vec<f64>, SolveError> {
    config.validate()?;
    if theta0.len() != obj.dim() {
        return Err(SolveError::DimensionMismatch { expected: obj.dim(), got: theta0.len() });
    }
    Ok(project_bounds(theta0))
}

/// Gradient with components zeroed where the box blocks descent.
fn projected_gradient(g: &DVector<f64>, theta: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        g.len(),
        g.iter().zip(theta).map(|(&gi, &t)| if (t >= 1.0 && gi < 0.0) || (t <= -1.0 && gi > 0.0) { 0.0 } else { gi }),
    )
}

pub fn solve_lm(obj: &dyn Objective, theta0: &[f64], config: &SolverConfig) -> Result<SolverResult, SolveError> {
    solve_lm_with(obj, theta0, config, &mut SolveControl::default())
}

/// Levenberg-Marquardt with diagonal scaling `J^T J + mu diag(J^T J)`. Steps
/// are projected onto the box before they are tried.
pub fn solve_lm_with(
    obj: &dyn Objective,
    theta0: &[f64],
    config: &SolverConfig,
    control: &mut SolveControl,
) -> Result<SolverResult, SolveError> {
    let mut theta = start(obj, theta0, config)?;
    control.observe(&theta);
    let mut current = checked_eval(obj, &theta, 0)?;
    let mut mu = config.lm_damping_init;
    let mut trace = vec![TraceRow { iteration: 0, energy: current.energy, damping: mu, step_norm: 0.0 }];
    let mut reason = Convergence::MaxIter;
    let mut iterations = 0;
    for iter in 1..=config.max_iterations {
        if control.cancelled() {
            reason = Convergence::Cancelled;
            break;
        }
        let jt = current.jacobian.transpose();
        let g = &jt * &current.values;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFiniteGradient { iteration: iter });
        }
        if projected_gradient(&g, &theta).amax() < config.tolerance_grad {
            reason = Convergence::Grad;
            break;
        }
        iterations = iter;
        let a = &jt * &current.jacobian;
        let max_diag = a.diagonal().amax();
        let floor = (max_diag * 1e-12).max(f64::MIN_POSITIVE);
        let diag: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].max(floor)).collect();
        let mut step_norm;
        let mut finished = false;
        loop {
            let mut m = a.clone();
            for (i, d) in diag.iter().enumerate() {
                m[(i, i)] += mu * d;
            }
            let Some(chol) = m.cholesky() else {
                mu *= config.lm_damping_up;
                if mu > MAX_DAMPING {
                    return Err(SolveError::SingularNormalEquations { damping: mu });
                }
                continue;
            };
            let delta = -chol.solve(&g);
            let cand: Vec<f64> = project_bounds(&theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect::<Vec<_>>());
            step_norm = cand.iter().zip(&theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if step_norm < config.tolerance_step {
                reason = Convergence::Step;
                finished = true;
                break;
            }
            let trial = checked_eval(obj, &cand, iter)?;
            if trial.energy < current.energy {
                theta = cand;
                current = trial;
                mu = (mu * config.lm_damping_down).max(1e-300);
                control.observe(&theta);
                break;
            }
            mu *= config.lm_damping_up;
            if mu > MAX_DAMPING {
                // no decrease even for vanishing steps
                reason = Convergence::Step;
                finished = true;
                break;
            }
        }
        trace.push(TraceRow { iteration: iter, energy: current.energy, damping: mu, step_norm });
        if finished {
            break;
        }
    }
    Ok(SolverResult { theta, iterations, energy: current.energy, reason, trace })
}

pub fn solve_adam(obj: &dyn Objective, theta0: &[f64], config: &SolverConfig) -> Result<SolverResult, SolveError> {
    solve_adam_with(obj, theta0, config, &mut SolveControl::default())
}

/// Adam on the gradient `2 J^T r` of the energy, clamping after every update.
pub fn solve_adam_with(
    obj: &dyn Objective,
    theta0: &[f64],
    config: &SolverConfig,
    control: &mut SolveControl,
) -> Result<SolverResult, SolveError> {
    let mut theta = start(obj, theta0, config)?;
    control.observe(&theta);
    let d = theta.len();
    let mut current = checked_eval(obj, &theta, 0)?;
    let mut trace = vec![TraceRow { iteration: 0, energy: current.energy, damping: 0.0, step_norm: 0.0 }];
    let (mut m, mut v) = (vec![0.0; d], vec![0.0; d]);
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let mut reason = Convergence::MaxIter;
    let mut iterations = 0;
    for iter in 1..=config.max_iterations {
        if control.cancelled() {
            reason = Convergence::Cancelled;
            break;
        }
        let g = current.jacobian.transpose() * &current.values * 2.0;
        if g.iter().any(|x| !x.is_finite()) {
            return Err(SolveError::NonFiniteGradient { iteration: iter });
        }
        if projected_gradient(&g, &theta).amax() < config.tolerance_grad {
            reason = Convergence::Grad;
            break;
        }
        iterations = iter;
        let (c1, c2) = (1.0 - b1.powi(iter as i32), 1.0 - b2.powi(iter as i32));
        let mut next = theta.clone();
        for i in 0..d {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            next[i] -= config.adam_lr * (m[i] / c1) / ((v[i] / c2).sqrt() + config.adam_eps);
        }
        let next = project_bounds(&next);
        let step_norm = next.iter().zip(&theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        theta = next;
        control.observe(&theta);
        current = checked_eval(obj, &theta, iter)?;
        trace.push(TraceRow { iteration: iter, energy: current.energy, damping: 0.0, step_norm });
    }
    Ok(SolverResult { theta, iterations, energy: current.energy, reason, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_roundtrip() {
        let c = SolverConfig { max_iterations: 7, adam_lr: 0.2, seed: 9, ..Default::default() };
        assert_eq!(c.to_text().parse::<SolverConfig>().unwrap(), c);
        assert!("lm_damping_down = 2".parse::<SolverConfig>().is_err());
        assert!("color = red".parse::<SolverConfig>().is_err());
        assert!("max_iterations 3".parse::<SolverConfig>().is_err());
        let partial: SolverConfig = "# interactive\nmax_iterations = 15\n".parse().unwrap();
        assert_eq!(partial.max_iterations, 15);
        assert_eq!(partial.tolerance_grad, 1e-8);
    }

    #[test]
    fn projection() {
        assert_eq!(project_bounds(&[0.3, 1.2, -7.0]), vec![0.3, 1.0, -1.0]);
        let once = project_bounds(&[2.0, -0.5]);
        assert_eq!(project_bounds(&once), once);
    }

    #[test]
    fn trace_csv_header() {
        let rows = [TraceRow { iteration: 0, energy: 1.5, damping: 1e-3, step_norm: 0.0 }];
        assert!(trace_csv(&rows).starts_with("iteration,energy,damping,step_norm\n0,"));
    }
}
