use std::fmt::Write as _;
use std::path::Path;

use vfgrad_core::diff::{gradcheck as run_check, GradcheckConfig};
use vfgrad_core::font::GlyphId;

use crate::{glyphs, load_font, metric, CliError, Common};

pub fn gradcheck(
    common: &Common,
    path: &Path,
    text: Option<&str>,
    samples: usize,
    tolerance: f64,
    corrupt: bool,
) -> Result<(), CliError> {
    if !(tolerance > 0.0) {
        return Err(CliError::usage("--tolerance must be positive"));
    }
    let font = load_font(path)?;
    let ids: Vec<GlyphId> = match text {
        Some(t) => glyphs(&font, t)?,
        None => {
            let mut v: Vec<GlyphId> = font.char_map.values().copied().collect();
            v.sort();
            v.dedup();
            v
        }
    };
    if samples == 0 {
        eprintln!("warning: --samples 0 checks nothing");
    }
    let config = GradcheckConfig { samples, seed: common.seed, corrupt, ..Default::default() };
    let report = run_check(&font, &ids, &config);
    let mut csv = String::from("target,axis,max_rel_error\n");
    for row in &report.rows {
        println!("{:<10} {}  {:.3e}", row.target, row.axis, row.max_rel_error);
        let _ = writeln!(csv, "{},{},{:e}", row.target, row.axis, row.max_rel_error);
    }
    common.write_trace(&csv)?;
    let passed = report.passed(tolerance);
    metric(&[
        ("max_rel_error", format!("{:e}", report.max_rel_error)),
        ("samples", report.samples.to_string()),
        ("rejected", report.rejected.to_string()),
        ("passed", passed.to_string()),
    ]);
    if passed {
        Ok(())
    } else {
        Err(CliError::failed(format!("max relative error {:e} is not below {tolerance:e}", report.max_rel_error)))
    }
}
