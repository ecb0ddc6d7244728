use std::path::Path;

use vfgrad_core::collide::{max_penetration, DEFAULT_DENSITY};
use vfgrad_core::energy::{
    collision_energy, constraint_energy, ConstraintKind, drag_energy, handle_point, CompositeEnergy, WordObjective, DEFAULT_DRAG_LAMBDA,
};
use vfgrad_core::interp::{export_svg, layout_word, SvgOptions, WordTheta};
use vfgrad_core::solve::{solve_lm, SolverConfig};

use crate::scenario::{uniform_theta, Scenario, Target};
use crate::{glyphs, load_font, metric, write_file, CliError, Common};

const DEFAULT_ITERATIONS: usize = 50;

const KEYS: [&str; 13] = [
    "font", "text", "start", "handle", "target", "target_at", "lambda", "constraint", "collision", "density",
    "max_iterations", "iterations", "scene",
];

/// `collision` is `None` for plain drags and the resolve toggle otherwise.
pub fn drag(common: &Common, path: &Path, collision: Option<bool>, output: Option<&Path>) -> Result<(), CliError> {
    let name = if collision.is_some() { "resolve" } else { "drag" };
    let sc = Scenario::load(path)?;
    sc.only(name, &KEYS)?;
    let handle = sc.handle.ok_or_else(|| CliError::usage("scenario has no handle line"))?;
    let target_spec = sc.target.clone().ok_or_else(|| CliError::usage("scenario has no target or target_at line"))?;
    let config = common.solver(SolverConfig::default().with_max_iterations(sc.max_iterations.unwrap_or(DEFAULT_ITERATIONS)))?;
    let font = load_font(sc.require_font()?)?;
    let ids = glyphs(&font, sc.require_text()?)?;
    if ids.is_empty() {
        return Err(CliError::usage("scenario text is empty"));
    }
    let start = uniform_theta(&font, &sc.start, ids.len())?;
    let layout_at = |theta: &WordTheta| layout_word(&font, &ids, theta).map_err(|e| CliError::usage(e.to_string()));
    let start_layout = layout_at(&start)?;
    handle_point(&start_layout, handle).map_err(|e| CliError::usage(e.to_string()))?;
    let target = match target_spec {
        Target::Point(p) => p,
        Target::At(settings) => {
            let theta = uniform_theta(&font, &settings, ids.len())?;
            handle_point(&layout_at(&theta)?, handle).expect("handle checked")
        }
    };
    let upem = font.units_per_em as f64;
    let mut energy = CompositeEnergy::new(vec![drag_energy(
        handle,
        target,
        start.as_slice().to_vec(),
        sc.lambda.unwrap_or(DEFAULT_DRAG_LAMBDA),
    )]);
    for c in &sc.constraints {
        let targets = if c.targets.is_empty() && c.kind == ConstraintKind::Pin {
            c.handles
                .iter()
                .map(|&h| handle_point(&start_layout, h).map_err(|e| CliError::usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            c.targets.clone()
        };
        energy.push(constraint_energy(c.kind, c.handles.clone(), targets, upem).map_err(|e| CliError::usage(e.to_string()))?);
    }
    let density = sc.density.unwrap_or(DEFAULT_DENSITY);
    let enabled = match collision {
        Some(toggle) => toggle && sc.collision.unwrap_or(true),
        None => sc.collision.unwrap_or(false),
    };
    if enabled {
        if sc.scene.is_empty() {
            return Err(CliError::usage("collision is on but the scenario has no colliders"));
        }
        energy.push(collision_energy(sc.scene.clone(), density));
    }
    let objective = WordObjective { font: &font, glyphs: &ids, energy: &energy };
    let result = solve_lm(&objective, start.as_slice(), &config).map_err(|e| CliError::failed(format!("solver: {e}")))?;
    common.write_trace(&result.trace_csv())?;
    let theta = WordTheta::from_flat(font.axis_count(), result.theta.clone()).expect("solver keeps the dimension");
    let layout = layout_at(&theta)?;
    let reached = handle_point(&layout, handle).expect("handle checked");
    if let Some(out) = output {
        write_file(out, export_svg(&layout, &SvgOptions::new(font.units_per_em)).as_bytes())?;
    }
    let monotone = result.trace.windows(2).all(|w| w[1].energy <= w[0].energy);
    let at_bounds = result.theta.iter().filter(|v| v.abs() == 1.0).count();
    let weights: Vec<String> = result.theta.iter().map(|v| v.to_string()).collect();
    println!("target {} {}", target.x, target.y);
    println!("reached {} {}", reached.x, reached.y);
    println!("theta {}", weights.join(" "));
    let mut pairs = vec![
        ("residual", reached.distance(target).to_string()),
        ("iterations", result.iterations.to_string()),
        ("energy", result.energy.to_string()),
        ("reason", result.reason.as_str().to_string()),
        ("at_bounds", at_bounds.to_string()),
        ("monotone", monotone.to_string()),
    ];
    if !sc.scene.is_empty() {
        pairs.push(("max_penetration", max_penetration(&layout, &sc.scene, density).to_string()));
        pairs.push(("collision", enabled.to_string()));
    }
    metric(&pairs);
    Ok(())
}
