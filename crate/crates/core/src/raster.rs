//! Soft signed-distance rasterization with gradients through control points.
//!
//! A pixel's value is `sigmoid(-sd / tau)` where `sd` is the signed pixel
//! distance to the sampled outline (negative inside, nonzero winding).

use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::collide::{sample_outline, OutlineSample, DEFAULT_DENSITY};
use crate::geom::{bernstein3, project_on_segment, winding_number, Bounds, Point};
use crate::interp::{Curves, WordLayout};

/// Pixels further than this many softness widths from the outline carry no
/// gradient.
pub const SATURATION: f64 = 10.0;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("bad PGM: {0}")]
    BadFormat(String),
    #[error("image is {got:?}, expected {expected:?}")]
    SizeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pixel grid and the font-unit to pixel mapping `(s x + tx, ty - s y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
    /// Softness in pixels.
    pub tau: f64,
    pub density: usize,
}

impl RasterConfig {
    pub fn new(width: usize, height: usize, scale: f64, tx: f64, ty: f64) -> RasterConfig {
        RasterConfig { width, height, scale, tx, ty, tau: 1.5, density: DEFAULT_DENSITY }
    }

    /// Centers `bounds` in a `width` x `height` grid, leaving `margin` of the
    /// shorter side free on every edge.
    pub fn fit(bounds: Bounds, width: usize, height: usize, margin: f64) -> RasterConfig {
        let (w, h) = (width as f64, height as f64);
        let usable = (1.0 - 2.0 * margin).max(0.05);
        let scale = (w * usable / bounds.width().max(1e-9)).min(h * usable / bounds.height().max(1e-9));
        let cx = 0.5 * (bounds.min.x + bounds.max.x);
        let cy = 0.5 * (bounds.min.y + bounds.max.y);
        RasterConfig::new(width, height, scale, 0.5 * w - scale * cx, 0.5 * h + scale * cy)
    }

    pub fn to_pixel(&self, p: Point) -> Point {
        Point::new(self.scale * p.x + self.tx, self.ty - self.scale * p.y)
    }

    pub fn from_pixel(&self, q: Point) -> Point {
        Point::new((q.x - self.tx) / self.scale, (self.ty - q.y) / self.scale)
    }

    /// Font-unit position of the center of pixel (`col`, `row`).
    pub fn pixel_center(&self, col: usize, row: usize) -> Point {
        self.from_pixel(Point::new(col as f64 + 0.5, row as f64 + 0.5))
    }
}

/// Grayscale image, row-major, ink = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SoftImage {
    pub fn blank(width: usize, height: usize) -> SoftImage {
        SoftImage { width, height, values: vec![0.0; width * height] }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Sum of squared differences.
    pub fn sq_distance(&self, other: &SoftImage) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// Derivative of one pixel with respect to the control points that shape its
/// nearest outline point: `d value / d P_i = weight * grad`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelGradient {
    pub pixel: usize,
    pub grad: Point,
    pub weights: Vec<(usize, f64)>,
}

struct Edge {
    a: OutlineSample,
    b: OutlineSample,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn control_weights(layout: &WordLayout, s: &OutlineSample, scale: f64, out: &mut Vec<(usize, f64)>) {
    let seg = layout.segments()[s.segment];
    for (q, b) in bernstein3(s.t).into_iter().enumerate() {
        if b * scale != 0.0 {
            out.push((seg[q], b * scale));
        }
    }
}

fn render(layout: &WordLayout, config: &RasterConfig, gradients: bool) -> (SoftImage, Vec<PixelGradient>) {
    let mut image = SoftImage::blank(config.width, config.height);
    let mut grads = Vec::new();
    let samples = sample_outline(layout, config.density);
    let mut polylines: Vec<Vec<OutlineSample>> = Vec::new();
    let mut key = None;
    for s in &samples.samples {
        if key != Some((s.glyph, s.contour)) {
            polylines.push(Vec::new());
            key = Some((s.glyph, s.contour));
        }
        polylines.last_mut().unwrap().push(*s);
    }
    polylines.retain(|p| p.len() >= 2);
    if polylines.is_empty() {
        return (image, grads);
    }
    let rings: Vec<Vec<Point>> = polylines.iter().map(|p| p.iter().map(|s| s.position).collect()).collect();
    let mut edges = Vec::new();
    for poly in &polylines {
        for k in 0..poly.len() {
            edges.push(Edge { a: poly[k], b: poly[(k + 1) % poly.len()] });
        }
    }
    for row in 0..config.height {
        for col in 0..config.width {
            let q = config.pixel_center(col, row);
            let mut best = (f64::INFINITY, 0usize, 0.0, Point::ZERO);
            for (e, edge) in edges.iter().enumerate() {
                let (u, c) = project_on_segment(q, edge.a.position, edge.b.position);
                let d = c.distance(q);
                if d < best.0 {
                    best = (d, e, u, c);
                }
            }
            let inside = rings.iter().map(|r| winding_number(q, r)).sum::<i32>() != 0;
            let sign = if inside { -1.0 } else { 1.0 };
            let sd = sign * best.0 * config.scale;
            let v = logistic(-sd / config.tau);
            let pixel = row * config.width + col;
            image.values[pixel] = v;
            if !gradients || sd.abs() > SATURATION * config.tau {
                continue;
            }
            let edge = &edges[best.1];
            let out_normal = if best.0 > 1e-12 {
                (q - best.3) * (sign / best.0)
            } else {
                let t = edge.b.position - edge.a.position;
                let n = -t.perp_left();
                n * (1.0 / n.norm().max(1e-300))
            };
            // d sd / d c = -out_normal in font units
            let dv_dsd = -v * (1.0 - v) / config.tau;
            let grad = out_normal * (-dv_dsd * config.scale);
            let mut weights = Vec::with_capacity(8);
            control_weights(layout, &edge.a, 1.0 - best.2, &mut weights);
            control_weights(layout, &edge.b, best.2, &mut weights);
            grads.push(PixelGradient { pixel, grad, weights });
        }
    }
    (image, grads)
}

pub fn rasterize(layout: &WordLayout, config: &RasterConfig) -> SoftImage {
    render(layout, config, false).0
}

pub fn rasterize_with_gradients(layout: &WordLayout, config: &RasterConfig) -> (SoftImage, Vec<PixelGradient>) {
    render(layout, config, true)
}

/// Chains pixel gradients through a point Jacobian: rows = pixels.
pub fn chain_jacobian(pixels: usize, grads: &[PixelGradient], jacobian: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(pixels, jacobian.ncols());
    for g in grads {
        for &(i, w) in &g.weights {
            for c in 0..jacobian.ncols() {
                out[(g.pixel, c)] += w * (g.grad.x * jacobian[(2 * i, c)] + g.grad.y * jacobian[(2 * i + 1, c)]);
            }
        }
    }
    out
}

/// d image / d theta for `layout` with point Jacobian `jacobian`.
pub fn image_residual_jacobian(layout: &WordLayout, jacobian: &DMatrix<f64>, config: &RasterConfig) -> DMatrix<f64> {
    let (_, grads) = rasterize_with_gradients(layout, config);
    chain_jacobian(config.width * config.height, &grads, jacobian)
}

/// Binary PGM with ink stored dark.
pub fn encode_pgm(image: &SoftImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.values.iter().map(|v| (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<SoftImage, RasterError> {
    let bad = |m: &str| RasterError::BadFormat(m.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String, RasterError> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let mut num = || -> Result<usize, RasterError> { token()?.parse().map_err(|_| bad("bad header number")) };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(bad("only 8-bit PGM (maxval 255) is supported"));
    }
    let data = &bytes[(pos + 1).min(bytes.len())..];
    if data.len() < width * height {
        return Err(bad("truncated pixel data"));
    }
    let values = data[..width * height].iter().map(|&g| 1.0 - g as f64 / 255.0).collect();
    Ok(SoftImage { width, height, values })
}

pub fn save_pgm(path: &Path, image: &SoftImage) -> Result<(), RasterError> {
    Ok(std::fs::write(path, encode_pgm(image))?)
}

/// Loads a target image and checks it against the raster grid.
pub fn load_target(path: &Path, config: &RasterConfig) -> Result<SoftImage, RasterError> {
    let image = decode_pgm(&std::fs::read(path)?)?;
    if (image.width, image.height) != (config.width, config.height) {
        return Err(RasterError::SizeMismatch {
            expected: (config.width, config.height),
            got: (image.width, image.height),
        });
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_roundtrip_and_conventions() {
        let img = SoftImage { width: 3, height: 2, values: vec![0.0, 1.0, 0.5, 0.25, 0.999, 0.0] };
        let back = decode_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!((back.width, back.height), (3, 2));
        for (a, b) in img.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
        let white = decode_pgm(b"P5\n# comment\n2 1\n255\n\xff\xff").unwrap();
        assert_eq!(white.values, vec![0.0, 0.0]);
        let black = decode_pgm(b"P5 2 1 255\n\x00\x00").unwrap();
        assert_eq!(black.values, vec![1.0, 1.0]);
        assert!(decode_pgm(b"P2 1 1 255\n0").is_err());
        assert!(decode_pgm(b"P5 1 1 65535\n\x00\x00").is_err());
        assert!(decode_pgm(b"P5 4 4 255\n\x00").is_err());
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!(logistic(-800.0) >= 0.0 && logistic(800.0) <= 1.0);
        assert!(logistic(10.0) > 0.9999);
    }

    #[test]
    fn fit_maps_bounds_inside_grid() {
        let b = Bounds { min: Point::new(0.0, 0.0), max: Point::new(100.0, 50.0) };
        let c = RasterConfig::fit(b, 64, 32, 0.1);
        let lo = c.to_pixel(b.min);
        let hi = c.to_pixel(b.max);
        assert!(lo.x >= 0.0 && hi.x <= 64.0 && hi.y >= 0.0 && lo.y <= 32.0);
        let q = c.from_pixel(c.to_pixel(Point::new(12.0, 34.0)));
        assert!((q - Point::new(12.0, 34.0)).norm() < 1e-12);
    }
}
