use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;
use vfgrad_core::font::FontModel;
use vfgrad_core::interp::format_number;

use crate::{load_font, metric, CliError, Common};

fn code_points(font: &FontModel) -> BTreeMap<u16, Vec<u32>> {
    let mut by_glyph: BTreeMap<u16, Vec<u32>> = BTreeMap::new();
    for (&c, g) in &font.char_map {
        by_glyph.entry(g.0).or_default().push(c);
    }
    by_glyph
}

fn report(font: &FontModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "units_per_em {}", font.units_per_em);
    let _ = writeln!(out, "axes {}", font.axis_count());
    for a in &font.axes {
        let _ = write!(out, "  {} {} {} {}", a.tag, format_number(a.min), format_number(a.default), format_number(a.max));
        if !a.avar_map.is_empty() {
            let map: Vec<String> =
                a.avar_map.iter().map(|(f, t)| format!("{}:{}", format_number(*f), format_number(*t))).collect();
            let _ = write!(out, " avar {}", map.join(" "));
        }
        out.push('\n');
    }
    let chars = code_points(font);
    let _ = writeln!(out, "glyphs {}", font.glyphs.len());
    let _ = writeln!(out, "  gid      k    m  contours  segments  chars");
    for (i, g) in font.glyphs.iter().enumerate() {
        let cps: Vec<String> = chars.get(&(i as u16)).map_or(Vec::new(), |v| v.iter().map(|c| format!("U+{c:04X}")).collect());
        let _ = writeln!(
            out,
            "  {:<5} {:>4} {:>4} {:>9} {:>9}  {}",
            i,
            g.outline_point_count(),
            g.delta_set_count(),
            g.contours.len(),
            g.segments().len(),
            cps.join(" ")
        );
    }
    let _ = writeln!(out, "warnings {}", font.warnings.len());
    for w in &font.warnings {
        let _ = writeln!(out, "  {w}");
    }
    out
}

fn report_json(font: &FontModel) -> serde_json::Value {
    let chars = code_points(font);
    json!({
        "units_per_em": font.units_per_em,
        "axis_count": font.axis_count(),
        "axes": font.axes.iter().map(|a| json!({
            "tag": a.tag.to_string(), "min": a.min, "default": a.default, "max": a.max,
            "avar": a.avar_map.iter().map(|&(f, t)| [f, t]).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "glyphs": font.glyphs.iter().enumerate().map(|(i, g)| json!({
            "gid": i,
            "k": g.outline_point_count(),
            "m": g.delta_set_count(),
            "contours": g.contours.len(),
            "segments": g.segments().len(),
            "chars": chars.get(&(i as u16)).cloned().unwrap_or_default(),
        })).collect::<Vec<_>>(),
        "warnings": font.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
    })
}

pub fn inspect(common: &Common, path: &Path, as_json: bool) -> Result<(), CliError> {
    common.no_trace("inspect")?;
    let font = load_font(path)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&report_json(&font)).expect("json values serialize"));
        return Ok(());
    }
    print!("{}", report(&font));
    metric(&[
        ("axes", font.axis_count().to_string()),
        ("glyphs", font.glyphs.len().to_string()),
        ("delta_sets", font.glyphs.iter().map(|g| g.delta_set_count()).sum::<usize>().to_string()),
        ("warnings", font.warnings.len().to_string()),
    ]);
    Ok(())
}
