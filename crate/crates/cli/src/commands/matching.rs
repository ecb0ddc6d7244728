use std::path::Path;

use vfgrad_core::energy::{image_energy, CompositeEnergy, WordObjective};
use vfgrad_core::font::{FontModel, GlyphId};
use vfgrad_core::geom::{Bounds, Point};
use vfgrad_core::interp::{export_svg, layout_word, Curves, SvgOptions, WordLayout, WordTheta};
use vfgrad_core::raster::{load_target, rasterize, save_pgm, RasterConfig};
use vfgrad_core::solve::{solve_adam, solve_lm, Objective, SolverConfig};

use crate::scenario::{uniform_theta, Scenario};
use crate::{glyphs, load_font, metric, write_file, CliError, Common};

const KEYS: [&str; 14] = [
    "font", "text", "start", "target_axes", "target_font", "target_text", "target_image", "frame", "size", "tau",
    "margin", "iterations", "lr", "method",
];

const DEFAULT_SIZE: usize = 64;
const DEFAULT_ITERATIONS: usize = 100;
const DEFAULT_MARGIN: f64 = 0.1;

fn layout(font: &FontModel, ids: &[GlyphId], theta: &WordTheta) -> Result<WordLayout, CliError> {
    layout_word(font, ids, theta).map_err(|e| CliError::usage(e.to_string()))
}

fn control_points(l: &WordLayout) -> Vec<Point> {
    (0..l.segments().len()).flat_map(|s| l.segment_controls(s)).collect()
}

pub fn matching(common: &Common, path: &Path, output: Option<&Path>, image_out: Option<&Path>) -> Result<(), CliError> {
    let sc = Scenario::load(path)?;
    sc.only("match", &KEYS)?;
    let sources = [!sc.target_axes.is_empty() || sc.target_font.is_some(), sc.target_image.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::usage("give either target_axes/target_font or target_image"));
    }
    if sc.target_image.is_some() && sc.frame.is_none() {
        return Err(CliError::usage("target_image needs a frame line"));
    }
    let size = sc.size.unwrap_or(DEFAULT_SIZE);
    if !(4..=4096).contains(&size) {
        return Err(CliError::usage("size must lie in 4..=4096"));
    }
    let method = sc.method.clone().unwrap_or_else(|| "adam".into());
    let mut base = SolverConfig::default().with_max_iterations(sc.max_iterations.unwrap_or(DEFAULT_ITERATIONS));
    if let Some(lr) = sc.lr {
        base.adam_lr = lr;
    }
    let config = common.solver(base)?;
    let font = load_font(sc.require_font()?)?;
    let text = sc.require_text()?;
    let ids = glyphs(&font, text)?;
    if ids.is_empty() {
        return Err(CliError::usage("scenario text is empty"));
    }
    let start = uniform_theta(&font, &sc.start, ids.len())?;
    let start_layout = layout(&font, &ids, &start)?;

    // target geometry, when the target is a font instance
    let same_font = sc.target_font.is_none() && sc.target_text.as_deref().is_none_or(|t| t == text);
    let target_layout = if sc.target_image.is_some() {
        None
    } else {
        let tfont;
        let tf = match &sc.target_font {
            Some(p) => {
                tfont = load_font(p)?;
                &tfont
            }
            None => &font,
        };
        let tids = glyphs(tf, sc.target_text.as_deref().unwrap_or(text))?;
        let ttheta = uniform_theta(tf, &sc.target_axes, tids.len())?;
        Some(layout(tf, &tids, &ttheta)?)
    };

    let mut raster = match sc.frame {
        Some([x0, y0, x1, y1]) => {
            let b = Bounds { min: Point::new(x0, y0), max: Point::new(x1, y1) };
            RasterConfig::fit(b, size, size, 0.0)
        }
        None => {
            let mut b = start_layout.outline_bounds().ok_or_else(|| CliError::usage("start instance has no outline"))?;
            if let Some(t) = target_layout.as_ref().and_then(|l| l.outline_bounds()) {
                b = b.union(t);
            }
            RasterConfig::fit(b, size, size, sc.margin.unwrap_or(DEFAULT_MARGIN))
        }
    };
    if let Some(tau) = sc.tau {
        if !(tau > 0.0) {
            return Err(CliError::usage("tau must be positive"));
        }
        raster.tau = tau;
    }
    let target = match (&target_layout, &sc.target_image) {
        (Some(l), _) => rasterize(l, &raster),
        (None, Some(p)) => load_target(p, &raster).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        (None, None) => unreachable!("source checked above"),
    };
    let term = image_energy(target, raster.clone()).map_err(|e| CliError::usage(e.to_string()))?;
    let energy = CompositeEnergy::new(vec![term]);
    let objective = WordObjective { font: &font, glyphs: &ids, energy: &energy };
    let solve = if method == "lm" { solve_lm } else { solve_adam };
    let result = solve(&objective, start.as_slice(), &config).map_err(|e| CliError::failed(format!("solver: {e}")))?;
    common.write_trace(&result.trace_csv())?;
    let initial = objective.evaluate(start.as_slice()).map_err(|e| CliError::failed(e.to_string()))?.energy;
    let last = objective.evaluate(&result.theta).map_err(|e| CliError::failed(e.to_string()))?.energy;
    let theta = WordTheta::from_flat(font.axis_count(), result.theta.clone()).expect("solver keeps the dimension");
    let fitted = layout(&font, &ids, &theta)?;
    if let Some(out) = output {
        write_file(out, export_svg(&fitted, &SvgOptions::new(font.units_per_em)).as_bytes())?;
    }
    if let Some(out) = image_out {
        save_pgm(out, &rasterize(&fitted, &raster)).map_err(|e| CliError::usage(format!("{}: {e}", out.display())))?;
    }
    let weights: Vec<String> = result.theta.iter().map(|v| v.to_string()).collect();
    println!("theta {}", weights.join(" "));
    let reduction = if initial > 0.0 { 1.0 - last / initial } else { 0.0 };
    let mut pairs = vec![
        ("reduction", reduction.to_string()),
        ("initial_energy", initial.to_string()),
        ("final_energy", last.to_string()),
        ("iterations", result.iterations.to_string()),
        ("reason", result.reason.as_str().to_string()),
    ];
    if let (true, Some(t)) = (same_font, &target_layout) {
        let (a, b) = (control_points(&fitted), control_points(t));
        let mean = a.iter().zip(&b).map(|(p, q)| p.distance(*q)).sum::<f64>() / a.len().max(1) as f64;
        pairs.push(("mean_distance", mean.to_string()));
        pairs.push(("mean_distance_em", (mean / font.units_per_em as f64).to_string()));
    }
    metric(&pairs);
    Ok(())
}
