use std::fmt::Write as _;
use std::path::Path;

use vfgrad_core::collide::max_penetration;
use vfgrad_core::interp::layout_word;
use vfgrad_core::sim::{export_frames, run, SimScript, SimState};
use vfgrad_core::solve::SolverConfig;

use crate::scenario::{uniform_theta, Scenario};
use crate::{glyphs, load_font, metric, CliError, Common};

const KEYS: [&str; 12] =
    ["font", "text", "start", "script", "dt", "steps", "stiffness", "mass", "rest", "impulse", "density", "scene"];

pub fn simulate(common: &Common, path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let sc = Scenario::load(path)?;
    sc.only("simulate", &KEYS)?;
    let config = common.solver(SolverConfig::default())?;
    let mut script: SimScript = sc.script.parse().map_err(|e: vfgrad_core::sim::SimError| CliError::usage(e.to_string()))?;
    if !sc.scene.is_empty() {
        script.scene.walls.extend(sc.scene.walls.iter().cloned());
        script.scene.polygons.extend(sc.scene.polygons.iter().cloned());
        script.scene.pairwise |= sc.scene.pairwise;
    }
    if let Some(d) = sc.density {
        script.density = d;
    }
    let font = load_font(sc.require_font()?)?;
    let ids = glyphs(&font, sc.require_text()?)?;
    let start = uniform_theta(&font, &sc.start, ids.len())?;
    script.validate(start.as_slice().len()).map_err(|e| CliError::usage(e.to_string()))?;
    let trajectory =
        run(&font, &ids, &script, SimState::at_rest(start), &config).map_err(|e| CliError::failed(e.to_string()))?;
    let mut csv = String::from("frame,time,max_penetration");
    for j in 0..ids.len() {
        for a in &font.axes {
            let _ = write!(csv, ",{}[{j}]", a.tag.to_string().trim());
        }
    }
    csv.push('\n');
    let mut worst = 0.0f64;
    for (i, s) in trajectory.iter().enumerate() {
        let layout = layout_word(&font, &ids, &s.theta).map_err(|e| CliError::failed(e.to_string()))?;
        let pen = max_penetration(&layout, &script.scene, script.density);
        worst = worst.max(pen);
        let _ = write!(csv, "{i},{},{pen}", s.time);
        for v in s.theta.as_slice() {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    common.write_trace(&csv)?;
    let written = match out {
        Some(dir) => export_frames(&font, &ids, &trajectory, dir).map_err(|e| CliError::usage(e.to_string()))?,
        None => 0,
    };
    let last = trajectory.last().expect("trajectory holds the initial state");
    let weights: Vec<String> = last.theta.as_slice().iter().map(|v| v.to_string()).collect();
    println!("final {}", weights.join(" "));
    metric(&[
        ("steps", script.steps.to_string()),
        ("states", trajectory.len().to_string()),
        ("frames", written.to_string()),
        ("max_penetration", worst.to_string()),
        ("time", last.time.to_string()),
    ]);
    Ok(())
}
