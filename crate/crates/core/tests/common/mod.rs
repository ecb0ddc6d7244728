#![allow(dead_code)]

use std::path::PathBuf;

use vfgrad_core::font::{parse_font, FontModel, GlyphId};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn font(name: &str) -> FontModel {
    parse_font(&std::fs::read(fixtures().join(format!("{name}.ttf"))).unwrap()).unwrap()
}

pub fn word(model: &FontModel, text: &str) -> Vec<GlyphId> {
    model.glyphs_for_text(text).unwrap()
}
