//! Line-based scenario files shared by the batch commands.
//!
//! Each line is a keyword followed by arguments; `#` starts a comment. Paths
//! are relative to the scenario file. Collider lines (`wall`, `poly`,
//! `pairwise`) build the scene. Keywords a command does not use are rejected
//! by that command, so typos do not pass silently.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use vfgrad_core::collide::ColliderScene;
use vfgrad_core::energy::{ConstraintKind, Handle};
use vfgrad_core::font::{FontModel, Tag};
use vfgrad_core::geom::Point;
use vfgrad_core::interp::{normalize_axis, WordTheta};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Point(Point),
    /// Where the handle sits at this instance (design units, all glyphs).
    At(Vec<(String, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub handles: Vec<Handle>,
    pub targets: Vec<Point>,
}

#[derive(Clone, Debug, Default)]
pub struct Scenario {
    pub base: PathBuf,
    pub font: Option<PathBuf>,
    pub text: Option<String>,
    pub start: Vec<(String, f64)>,
    pub handle: Option<Handle>,
    pub target: Option<Target>,
    pub lambda: Option<f64>,
    pub constraints: Vec<ConstraintSpec>,
    pub collision: Option<bool>,
    pub density: Option<usize>,
    pub max_iterations: Option<usize>,
    pub scene: ColliderScene,
    /// Simulation lines, passed through to the script parser.
    pub script: String,
    pub target_axes: Vec<(String, f64)>,
    pub target_font: Option<PathBuf>,
    pub target_text: Option<String>,
    pub target_image: Option<PathBuf>,
    pub frame: Option<[f64; 4]>,
    pub size: Option<usize>,
    pub tau: Option<f64>,
    pub margin: Option<f64>,
    pub lr: Option<f64>,
    pub method: Option<String>,
    seen: BTreeSet<&'static str>,
}

const KEYWORDS: [&str; 29] = [
    "font", "text", "start", "handle", "target", "target_at", "lambda", "constraint", "collision", "density",
    "max_iterations", "iterations", "script", "dt", "steps", "stiffness", "mass", "rest", "impulse",
    "target_axes", "target_font", "target_text", "target_image", "frame", "size", "tau", "margin", "lr", "method",
];

fn keyword(k: &str) -> Option<&'static str> {
    KEYWORDS.iter().find(|&&w| w == k).copied()
}

/// Parses `tag=value`.
pub fn parse_setting(s: &str) -> Result<(String, f64), String> {
    let (tag, value) = s.split_once('=').ok_or_else(|| format!("expected tag=value, got {s:?}"))?;
    let v: f64 = value.trim().parse().map_err(|_| format!("bad number in {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("value in {s:?} is not finite"));
    }
    let tag = tag.trim();
    tag.parse::<Tag>()?;
    Ok((tag.to_string(), v))
}

fn parse_handle(s: &str) -> Result<Handle, String> {
    let (seg, t) = s.split_once(':').ok_or_else(|| format!("expected segment:t, got {s:?}"))?;
    let segment = seg.parse().map_err(|_| format!("bad segment in {s:?}"))?;
    let t: f64 = t.parse().map_err(|_| format!("bad t in {s:?}"))?;
    if !(0.0..=1.0).contains(&t) {
        return Err(format!("t outside [0, 1] in {s:?}"));
    }
    Ok(Handle { segment, t })
}

fn numbers(args: &[&str]) -> Result<Vec<f64>, String> {
    args.iter()
        .map(|a| a.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("bad number {a:?}")))
        .collect()
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, &base).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Scenario, String> {
        let mut s = Scenario { base: base.to_path_buf(), ..Default::default() };
        let mut any = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            any = true;
            s.line(line, i + 1).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        if !any {
            return Err("scenario is empty".into());
        }
        Ok(s)
    }

    fn line(&mut self, line: &str, number: usize) -> Result<(), String> {
        if self.scene.parse_line(line, number).map_err(|e| e.to_string())? {
            self.seen.insert("scene");
            return Ok(());
        }
        let mut words = line.split_whitespace();
        let key = words.next().unwrap_or("");
        let args: Vec<&str> = words.collect();
        let Some(k) = keyword(key) else { return Err(format!("unknown keyword {key:?}")) };
        let repeatable = matches!(k, "constraint" | "rest" | "impulse" | "script");
        if !self.seen.insert(k) && !repeatable {
            return Err(format!("{k} given twice"));
        }
        let rest = line[key.len()..].trim();
        let one = || match args.as_slice() {
            [a] => Ok(*a),
            _ => Err(format!("{k} takes one argument")),
        };
        let float = || one().and_then(|a| numbers(&[a]).map(|v| v[0]));
        let count = || one().and_then(|a| a.parse::<usize>().map_err(|_| format!("bad count {a:?}")));
        let settings = || args.iter().map(|a| parse_setting(a)).collect::<Result<Vec<_>, _>>();
        match k {
            "font" => self.font = Some(self.base.join(rest)),
            "text" => self.text = Some(rest.to_string()),
            "start" => self.start = settings()?,
            "handle" => {
                let v = numbers(&args)?;
                let [seg, t] = v[..] else { return Err("handle takes a segment and t".into()) };
                if seg < 0.0 || seg.fract() != 0.0 || !(0.0..=1.0).contains(&t) {
                    return Err("handle needs an integer segment and t in [0, 1]".into());
                }
                self.handle = Some(Handle { segment: seg as usize, t });
            }
            "target" | "target_at" => {
                if self.target.is_some() {
                    return Err("only one of target and target_at".into());
                }
                self.target = Some(if k == "target" {
                    let v = numbers(&args)?;
                    let [x, y] = v[..] else { return Err("target takes x y".into()) };
                    Target::Point(Point::new(x, y))
                } else {
                    Target::At(settings()?)
                });
            }
            "lambda" => self.lambda = Some(float()?),
            "constraint" => {
                let Some((kind, rest)) = args.split_first() else { return Err("constraint needs a kind".into()) };
                let kind: ConstraintKind = kind.parse()?;
                let split = rest.iter().position(|a| !a.contains(':')).unwrap_or(rest.len());
                let handles = rest[..split].iter().map(|a| parse_handle(a)).collect::<Result<Vec<_>, _>>()?;
                let coords = numbers(&rest[split..])?;
                if coords.len() % 2 != 0 {
                    return Err("constraint targets come in x y pairs".into());
                }
                let targets = coords.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
                self.constraints.push(ConstraintSpec { kind, handles, targets });
            }
            "collision" => {
                self.collision = Some(match one()? {
                    "on" => true,
                    "off" => false,
                    other => return Err(format!("collision expects on|off, got {other:?}")),
                })
            }
            "density" => self.density = Some(count()?),
            "max_iterations" | "iterations" => {
                if self.max_iterations.is_some() {
                    return Err("iteration budget given twice".into());
                }
                self.max_iterations = Some(count()?);
            }
            "script" => {
                let path = self.base.join(rest);
                let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                self.script.push_str(&text);
                self.script.push('\n');
            }
            "dt" | "steps" | "stiffness" | "mass" | "rest" | "impulse" => {
                self.script.push_str(line);
                self.script.push('\n');
            }
            "target_axes" => self.target_axes = settings()?,
            "target_font" => self.target_font = Some(self.base.join(rest)),
            "target_text" => self.target_text = Some(rest.to_string()),
            "target_image" => self.target_image = Some(self.base.join(rest)),
            "frame" => {
                let v = numbers(&args)?;
                let [x0, y0, x1, y1] = v[..] else { return Err("frame takes x0 y0 x1 y1".into()) };
                if !(x1 > x0 && y1 > y0) {
                    return Err("frame must have positive size".into());
                }
                self.frame = Some([x0, y0, x1, y1]);
            }
            "size" => self.size = Some(count()?),
            "tau" => self.tau = Some(float()?),
            "margin" => self.margin = Some(float()?),
            "lr" => self.lr = Some(float()?),
            "method" => {
                let m = one()?;
                if m != "adam" && m != "lm" {
                    return Err(format!("method expects adam|lm, got {m:?}"));
                }
                self.method = Some(m.to_string());
            }
            _ => unreachable!("keyword table covers {k}"),
        }
        Ok(())
    }

    /// Fails on keywords outside `allowed`; scene lines count as "scene".
    pub fn only(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        match self.seen.iter().find(|k| !allowed.contains(k)) {
            Some(k) => Err(CliError::usage(format!("{command} scenarios do not take {k:?}"))),
            None => Ok(()),
        }
    }

    pub fn require_font(&self) -> Result<&Path, CliError> {
        self.font.as_deref().ok_or_else(|| CliError::usage("scenario has no font line"))
    }

    pub fn require_text(&self) -> Result<&str, CliError> {
        self.text.as_deref().ok_or_else(|| CliError::usage("scenario has no text line"))
    }
}

/// Normalized weights for design-unit settings; unknown tags are usage errors.
pub fn apply_settings(font: &FontModel, base: &[f64], settings: &[(String, f64)]) -> Result<Vec<f64>, CliError> {
    let mut w = base.to_vec();
    for (tag, v) in settings {
        let parsed: Tag = tag.parse().map_err(CliError::usage)?;
        let a = font.axis_index(parsed).ok_or_else(|| {
            let known: Vec<String> = font.axes.iter().map(|a| a.tag.to_string()).collect();
            CliError::usage(format!("unknown axis {tag:?} (font has {})", known.join(", ")))
        })?;
        w[a] = normalize_axis(&font.axes[a], *v).map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(w)
}

/// The same instance for every glyph of the word.
pub fn uniform_theta(font: &FontModel, settings: &[(String, f64)], glyphs: usize) -> Result<WordTheta, CliError> {
    let w = apply_settings(font, &vec![0.0; font.axis_count()], settings)?;
    Ok(WordTheta::uniform(&w, glyphs))
}
