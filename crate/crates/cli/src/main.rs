//! `vfgrad`: batch entry points for inspecting, instancing and optimizing
//! variable fonts, plus the editing server.

mod commands;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vfgrad_core::font::{parse_font, FontModel, GlyphId};
use vfgrad_core::solve::SolverConfig;

use scenario::parse_setting;

#[derive(Parser)]
#[command(name = "vfgrad", version, about = "Differentiable variable-font tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for sampled checks and solver state.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver settings as `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write a per-iteration (or per-frame) CSV here.
    #[arg(long, global = true, value_name = "CSV")]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print axes and per-glyph structure of a font.
    Inspect {
        font: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write an SVG of a text at given axis settings (design units).
    Instance {
        font: PathBuf,
        #[arg(long, default_value = "")]
        text: String,
        /// Axis setting, repeatable.
        #[arg(long = "axis", value_name = "TAG=VALUE", value_parser = parse_setting)]
        axes: Vec<(String, f64)>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare analytic Jacobians against finite differences.
    Gradcheck {
        font: PathBuf,
        /// Glyphs to check; defaults to every mapped character.
        #[arg(long)]
        text: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, hide = true)]
        corrupt_jacobian: bool,
    },
    /// Solve a drag scenario.
    Drag {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a drag scenario with collision response.
    Resolve {
        scenario: PathBuf,
        #[arg(long)]
        no_collision: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a simulation scenario.
    Simulate {
        scenario: PathBuf,
        /// Directory for one SVG per frame.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit axis weights to a target image.
    Match {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the final soft raster as PGM.
        #[arg(long)]
        image_out: Option<PathBuf>,
    },
    /// Serve the editor and its WebSocket protocol.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long = "font", required = true)]
        fonts: Vec<PathBuf>,
        /// Directory of built editor assets served at `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

/// Failure with its exit status: 1 for failed checks and solves, 2 for
/// usage and input errors.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> CliError {
        CliError { code: 2, message: m.into() }
    }

    pub fn failed(m: impl Into<String>) -> CliError {
        CliError { code: 1, message: m.into() }
    }
}

/// Flags shared by every command.
pub struct Common {
    pub seed: u64,
    pub config: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Common {
    /// `base` overlaid with the config file, then the seed flag.
    pub fn solver(&self, base: SolverConfig) -> Result<SolverConfig, CliError> {
        let mut config = base;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            for raw in text.lines() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::usage(format!("{}: expected key = value, got {line:?}", path.display())))?;
                config.set(k.trim(), v.trim()).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            }
        }
        config.seed = self.seed;
        config.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(config)
    }

    pub fn write_trace(&self, csv: &str) -> Result<(), CliError> {
        match &self.trace {
            Some(path) => write_file(path, csv.as_bytes()),
            None => Ok(()),
        }
    }

    pub fn no_trace(&self, command: &str) -> Result<(), CliError> {
        match self.trace {
            Some(_) => Err(CliError::usage(format!("{command} does not write a trace"))),
            None => Ok(()),
        }
    }
}

pub fn load_font(path: &Path) -> Result<FontModel, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    parse_font(&bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn glyphs(font: &FontModel, text: &str) -> Result<Vec<GlyphId>, CliError> {
    font.glyphs_for_text(text).map_err(|missing| {
        let list: Vec<String> = missing.iter().map(|c| format!("U+{c:04X}")).collect();
        CliError::usage(format!("font has no glyph for {}", list.join(", ")))
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// `METRIC k=v ...`; values are printed with `{}` so they round-trip.
pub fn metric(pairs: &[(&str, String)]) {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("METRIC {}", body.join(" "));
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = Common { seed: cli.seed, config: cli.config, trace: cli.trace };
    match cli.command {
        Command::Inspect { font, json } => commands::inspect(&common, &font, json),
        Command::Instance { font, text, axes, output } => commands::instance(&common, &font, &text, &axes, &output),
        Command::Gradcheck { font, text, samples, tolerance, corrupt_jacobian } => {
            commands::gradcheck(&common, &font, text.as_deref(), samples, tolerance, corrupt_jacobian)
        }
        Command::Drag { scenario, output } => commands::drag(&common, &scenario, None, output.as_deref()),
        Command::Resolve { scenario, no_collision, output } => {
            commands::drag(&common, &scenario, Some(!no_collision), output.as_deref())
        }
        Command::Simulate { scenario, out } => commands::simulate(&common, &scenario, out.as_deref()),
        Command::Match { scenario, output, image_out } => {
            commands::matching(&common, &scenario, output.as_deref(), image_out.as_deref())
        }
        Command::Serve { port, host, fonts, assets } => commands::serve(&common, &host, port, &fonts, assets),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vfgrad: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
