use std::path::Path;

use vfgrad_core::interp::{export_svg, layout_word, Curves, SvgOptions, WordTheta};

use crate::scenario::apply_settings;
use crate::{glyphs, load_font, metric, write_file, CliError, Common};

pub fn instance(common: &Common, path: &Path, text: &str, axes: &[(String, f64)], output: &Path) -> Result<(), CliError> {
    common.no_trace("instance")?;
    let font = load_font(path)?;
    let w = apply_settings(&font, &vec![0.0; font.axis_count()], axes)?;
    let ids = glyphs(&font, text)?;
    let layout = layout_word(&font, &ids, &WordTheta::uniform(&w, ids.len())).map_err(|e| CliError::usage(e.to_string()))?;
    let svg = export_svg(&layout, &SvgOptions::new(font.units_per_em));
    write_file(output, svg.as_bytes())?;
    let weights: Vec<String> = w.iter().map(|v| v.to_string()).collect();
    metric(&[
        ("glyphs", ids.len().to_string()),
        ("segments", layout.segments().len().to_string()),
        ("weights", weights.join(",")),
        ("bytes", svg.len().to_string()),
    ]);
    Ok(())
}
