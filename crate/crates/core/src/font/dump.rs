//! Plain-text dump of unpacked variation data.
//!
//! The same line format is produced by `tools/reference_dump.py` from an
//! independent font engine, so the two can be diffed record by record:
//!
//! ```text
//! upem U
//! axis TAG MIN DEFAULT MAX
//! avar TAG FROM TO
//! glyph GID NAME KIND COUNT
//! P GID CONTOUR INDEX X Y ON
//! C GID INDEX CHILD DX DY
//! R GID SET TAG START PEAK END
//! D GID SET INDEX DX DY
//! ```
//!
//! Instance files use `L`, `N`, `I` and `W` records instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{FontModel, RawOutline};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefPoint {
    pub contour: i32,
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub on_curve: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefComponent {
    pub index: usize,
    pub child: u16,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefSet {
    /// (axis tag, start, peak, end) for active axes.
    pub tents: Vec<(String, f64, f64, f64)>,
    pub deltas: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefGlyph {
    pub gid: u16,
    pub name: String,
    pub kind: String,
    pub count: usize,
    pub points: Vec<RefPoint>,
    pub components: Vec<RefComponent>,
    pub sets: Vec<RefSet>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefDump {
    pub upem: u16,
    pub axes: Vec<(String, f64, f64, f64)>,
    pub avar: Vec<(String, f64, f64)>,
    pub glyphs: Vec<RefGlyph>,
}

/// One sampled design location with flattened instance outlines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefInstance {
    pub location: Vec<(String, f64)>,
    pub normalized: Vec<(String, f64)>,
    pub points: BTreeMap<u16, Vec<RefPoint>>,
    pub advances: BTreeMap<u16, f64>,
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T, String> {
    tok.ok_or_else(|| format!("line {line}: missing field"))?
        .parse()
        .map_err(|_| format!("line {line}: bad number"))
}

fn field(tok: Option<&str>, line: usize) -> Result<String, String> {
    tok.map(str::to_string).ok_or_else(|| format!("line {line}: missing field"))
}

fn glyph_mut(d: &mut RefDump, gid: u16, line: usize) -> Result<&mut RefGlyph, String> {
    d.glyphs
        .iter_mut()
        .rev()
        .find(|g| g.gid == gid)
        .ok_or_else(|| format!("line {line}: record for undeclared glyph {gid}"))
}

pub fn parse_ref(text: &str) -> Result<RefDump, String> {
    let mut d = RefDump::default();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut t = raw.split_whitespace();
        match t.next().unwrap() {
            "upem" => d.upem = num(t.next(), line)?,
            "axis" => d.axes.push((
                field(t.next(), line)?,
                num(t.next(), line)?,
                num(t.next(), line)?,
                num(t.next(), line)?,
            )),
            "avar" => d.avar.push((field(t.next(), line)?, num(t.next(), line)?, num(t.next(), line)?)),
            "glyph" => d.glyphs.push(RefGlyph {
                gid: num(t.next(), line)?,
                name: field(t.next(), line)?,
                kind: field(t.next(), line)?,
                count: num(t.next(), line)?,
                ..Default::default()
            }),
            "P" => {
                let gid = num(t.next(), line)?;
                let p = RefPoint {
                    contour: num(t.next(), line)?,
                    index: num(t.next(), line)?,
                    x: num(t.next(), line)?,
                    y: num(t.next(), line)?,
                    on_curve: num::<u8>(t.next(), line)? != 0,
                };
                glyph_mut(&mut d, gid, line)?.points.push(p);
            }
            "C" => {
                let gid = num(t.next(), line)?;
                let c = RefComponent {
                    index: num(t.next(), line)?,
                    child: num(t.next(), line)?,
                    dx: num(t.next(), line)?,
                    dy: num(t.next(), line)?,
                };
                glyph_mut(&mut d, gid, line)?.components.push(c);
            }
            "R" | "D" => {
                let kind = if raw.starts_with('R') { 'R' } else { 'D' };
                let gid = num(t.next(), line)?;
                let set: usize = num(t.next(), line)?;
                let g = glyph_mut(&mut d, gid, line)?;
                if g.sets.len() <= set {
                    g.sets.resize(set + 1, RefSet::default());
                }
                if kind == 'R' {
                    let tag = field(t.next(), line)?;
                    let s = num(t.next(), line)?;
                    let p = num(t.next(), line)?;
                    let e = num(t.next(), line)?;
                    g.sets[set].tents.push((tag, s, p, e));
                } else {
                    let _index: usize = num(t.next(), line)?;
                    let dx = num(t.next(), line)?;
                    let dy = num(t.next(), line)?;
                    g.sets[set].deltas.push((dx, dy));
                }
            }
            other => return Err(format!("line {line}: unknown record {other:?}")),
        }
    }
    Ok(d)
}

fn parse_assignments<'a>(t: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<(String, f64)>, String> {
    t.map(|kv| {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("line {line}: expected TAG=VALUE"))?;
        Ok((k.to_string(), v.parse().map_err(|_| format!("line {line}: bad number"))?))
    })
    .collect()
}

pub fn parse_instances(text: &str) -> Result<Vec<RefInstance>, String> {
    let mut out: Vec<RefInstance> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut t = raw.split_whitespace();
        let rec = t.next().unwrap();
        let loc: usize = num(t.next(), line)?;
        if rec == "L" {
            if loc != out.len() {
                return Err(format!("line {line}: locations out of order"));
            }
            out.push(RefInstance { location: parse_assignments(t, line)?, ..Default::default() });
            continue;
        }
        let inst = out.get_mut(loc).ok_or_else(|| format!("line {line}: undeclared location"))?;
        match rec {
            "N" => inst.normalized = parse_assignments(t, line)?,
            "I" => {
                let gid = num(t.next(), line)?;
                let p = RefPoint {
                    contour: num(t.next(), line)?,
                    index: num(t.next(), line)?,
                    x: num(t.next(), line)?,
                    y: num(t.next(), line)?,
                    on_curve: num::<u8>(t.next(), line)? != 0,
                };
                inst.points.entry(gid).or_default().push(p);
            }
            "W" => {
                let gid = num(t.next(), line)?;
                inst.advances.insert(gid, num(t.next(), line)?);
            }
            other => return Err(format!("line {line}: unknown record {other:?}")),
        }
    }
    Ok(out)
}

/// Writes the raw (pre-elevation) data of a model in reference format.
///
/// Glyph names are not stored in the model; glyphs are named `gN`.
pub fn write_ref(model: &FontModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "upem {}", model.units_per_em);
    for a in &model.axes {
        let _ = writeln!(s, "axis {} {:?} {:?} {:?}", a.tag, a.min, a.default, a.max);
    }
    for a in &model.axes {
        for &(f, t) in &a.avar_map {
            let _ = writeln!(s, "avar {} {f:?} {t:?}", a.tag);
        }
    }
    for (gid, g) in model.raw_glyphs.iter().enumerate() {
        let n = g.gvar_point_count();
        match &g.outline {
            RawOutline::Empty => {
                let _ = writeln!(s, "glyph {gid} g{gid} empty 0");
            }
            RawOutline::Simple { points, on_curve, contour_ends } => {
                let _ = writeln!(s, "glyph {gid} g{gid} simple {n}");
                let mut contour = 0;
                for (i, p) in points.iter().enumerate() {
                    let _ = writeln!(s, "P {gid} {contour} {i} {:?} {:?} {}", p.x, p.y, on_curve[i] as u8);
                    if contour_ends.get(contour) == Some(&i) {
                        contour += 1;
                    }
                }
            }
            RawOutline::Composite { components } => {
                let _ = writeln!(s, "glyph {gid} g{gid} composite {n}");
                for (i, c) in components.iter().enumerate() {
                    let _ = writeln!(s, "C {gid} {i} {} {:?} {:?}", c.glyph, c.dx, c.dy);
                }
            }
        }
        for (i, p) in g.phantoms[..2].iter().enumerate() {
            let _ = writeln!(s, "P {gid} -1 {} {:?} {:?} 1", n + i, p.x, p.y);
        }
        for (set, (region, deltas)) in g.tuples.iter().enumerate() {
            for (axis, tent) in &region.tents {
                let _ = writeln!(
                    s,
                    "R {gid} {set} {} {:?} {:?} {:?}",
                    model.axes[*axis].tag, tent.start, tent.peak, tent.end
                );
            }
            for (i, d) in deltas[..n + 2].iter().enumerate() {
                let _ = writeln!(s, "D {gid} {set} {i} {:?} {:?}", d.x, d.y);
            }
        }
    }
    s
}
