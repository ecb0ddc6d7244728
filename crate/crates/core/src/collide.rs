//! Outline sampling, penetration detection and contact frames.
//!
//! Normals point out of the collider. A contact's `depth` is `N·(p - b)`, so it
//! is negative for penetrating samples; [`Contact::penetration`] is its negation.

use std::str::FromStr;

use thiserror::Error;

use crate::geom::{
    cubic_point, cubic_second, cubic_tangent, inside_even_odd, project_on_segment, signed_area, winding_number, Bounds,
    Point,
};
use crate::interp::{Curves, WordLayout};

pub const DEFAULT_DENSITY: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("degenerate segment: all control points coincide")]
    DegenerateSegment,
    #[error("scene line {line}: {reason}")]
    Scene { line: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutlineSample {
    /// Glyph index within the word.
    pub glyph: usize,
    /// Contour index within the glyph.
    pub contour: usize,
    /// Global segment index in the layout.
    pub segment: usize,
    pub t: f64,
    pub position: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutlineSamples {
    pub samples: Vec<OutlineSample>,
    pub density: usize,
}

impl OutlineSamples {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Closed polylines, one per contour of glyph `j`, in sample order.
    pub fn polylines(&self, j: usize) -> Vec<Vec<Point>> {
        let mut out: Vec<Vec<Point>> = Vec::new();
        let mut current = None;
        for s in self.samples.iter().filter(|s| s.glyph == j) {
            if current != Some(s.contour) {
                out.push(Vec::new());
                current = Some(s.contour);
            }
            out.last_mut().unwrap().push(s.position);
        }
        out
    }

    /// Polylines of every glyph.
    pub fn all_polylines(&self) -> Vec<Vec<Point>> {
        let glyphs = self.samples.iter().map(|s| s.glyph + 1).max().unwrap_or(0);
        (0..glyphs).flat_map(|j| self.polylines(j)).collect()
    }

    pub fn glyph_bounds(&self, j: usize) -> Option<Bounds> {
        Bounds::from_points(self.samples.iter().filter(|s| s.glyph == j).map(|s| s.position))
    }
}

/// (glyph, contour) owning each global segment of the layout.
pub fn segment_owners(layout: &WordLayout) -> Vec<(usize, usize, bool)> {
    let mut owners = Vec::with_capacity(layout.segments().len());
    for (j, inst) in layout.instances.iter().enumerate() {
        for (c, contour) in inst.contours.iter().enumerate() {
            owners.extend(std::iter::repeat_n((j, c, contour.closed), contour.segment_count()));
        }
    }
    owners
}

/// Samples every segment at `density` uniform parameters. On closed contours
/// the end sample of each segment coincides with the next segment's start and
/// is dropped.
pub fn sample_outline(layout: &WordLayout, density: usize) -> OutlineSamples {
    let density = density.max(2);
    let owners = segment_owners(layout);
    let mut samples = Vec::new();
    for (s, &(glyph, contour, closed)) in owners.iter().enumerate() {
        let controls = layout.segment_controls(s);
        let last_of_contour = owners.get(s + 1).is_none_or(|o| (o.0, o.1) != (glyph, contour));
        let count = if closed || !last_of_contour { density - 1 } else { density };
        for k in 0..count {
            let t = k as f64 / (density - 1) as f64;
            samples.push(OutlineSample { glyph, contour, segment: s, t, position: cubic_point(&controls, t) });
        }
    }
    OutlineSamples { samples, density }
}

/// Closest point on a cubic segment. The normal assumes the filled side lies to
/// the left of the curve direction, so it points away from the fill.
pub fn nearest_on_cubic(p: Point, c: &[Point; 4]) -> Result<(f64, Point, Point), CollisionError> {
    if c[1] == c[0] && c[2] == c[0] && c[3] == c[0] {
        return Err(CollisionError::DegenerateSegment);
    }
    let dist2 = |t: f64| (cubic_point(c, t) - p).norm_squared();
    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    for k in 0..16 {
        let t = k as f64 / 15.0;
        let d = dist2(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let mut t = best_t;
    for _ in 0..10 {
        let q = cubic_point(c, t) - p;
        let d1 = cubic_tangent(c, t);
        let f = q.dot(d1);
        let fp = d1.norm_squared() + q.dot(cubic_second(c, t));
        if fp <= 0.0 {
            break;
        }
        let next = (t - f / fp).clamp(0.0, 1.0);
        if dist2(next) > dist2(t) {
            break;
        }
        let done = (next - t).abs() < 1e-14;
        t = next;
        if done {
            break;
        }
    }
    Ok((t, cubic_point(c, t), outward_normal(c, t)))
}

fn outward_normal(c: &[Point; 4], t: f64) -> Point {
    let mut tan = cubic_tangent(c, t);
    if tan.norm_squared() < 1e-24 {
        // cusp or coincident handles: fall back to the chord direction
        tan = c[3] - c[0];
        if tan.norm_squared() < 1e-24 {
            tan = c[2] - c[1];
        }
    }
    let n = -tan.perp_left();
    n * (1.0 / n.norm())
}

/// What a contact pushes against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContactSource {
    Wall(usize),
    Polygon { index: usize, edge: usize },
    /// Another glyph of the word, at `(segment, t)` of the layout.
    Glyph { glyph: usize, segment: usize, t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    /// Index into the [`OutlineSamples`] the contact was detected from.
    pub sample: usize,
    pub b: Point,
    pub normal: Point,
    pub depth: f64,
    pub source: ContactSource,
}

impl Contact {
    pub fn penetration(&self) -> f64 {
        (-self.depth).max(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContactSet {
    pub contacts: Vec<Contact>,
}

impl ContactSet {
    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn max_penetration(&self) -> f64 {
        self.contacts.iter().map(Contact::penetration).fold(0.0, f64::max)
    }
}

/// Segment wall: the free side lies to the left of `a -> b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
}

impl Wall {
    pub fn normal(&self) -> Point {
        let n = (self.b - self.a).perp_left();
        n * (1.0 / n.norm())
    }
}

/// Closed polygon stored counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    points: Vec<Point>,
}

impl Polygon {
    pub fn new(mut points: Vec<Point>) -> Polygon {
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        Polygon { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn contains(&self, p: Point) -> bool {
        inside_even_odd(p, &self.points)
    }

    /// Nearest boundary point, outward normal of its edge and the edge index.
    /// Ties go to the lowest edge index.
    pub fn nearest_boundary(&self, p: Point) -> (Point, Point, usize) {
        let n = self.points.len();
        let mut best = (f64::INFINITY, Point::ZERO, 0);
        for e in 0..n {
            let (a, b) = (self.points[e], self.points[(e + 1) % n]);
            if a == b {
                continue;
            }
            let (_, q) = project_on_segment(p, a, b);
            let d = q.distance(p);
            if d < best.0 {
                best = (d, q, e);
            }
        }
        let (a, b) = (self.points[best.2], self.points[(best.2 + 1) % n]);
        let normal = -(b - a).perp_left();
        (best.1, normal * (1.0 / normal.norm()), best.2)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ColliderScene {
    pub walls: Vec<Wall>,
    pub polygons: Vec<Polygon>,
    pub pairwise: bool,
}

impl ColliderScene {
    pub fn is_empty(&self) -> bool {
        self.walls.is_empty() && self.polygons.is_empty() && !self.pairwise
    }

    /// Parses one scene line; returns `Ok(false)` for keywords it does not own.
    pub fn parse_line(&mut self, line: &str, number: usize) -> Result<bool, CollisionError> {
        let err = |reason: String| CollisionError::Scene { line: number, reason };
        let mut words = line.split_whitespace();
        let Some(key) = words.next() else { return Ok(true) };
        let nums = |words: std::str::SplitWhitespace| -> Result<Vec<f64>, CollisionError> {
            words.map(|w| w.parse::<f64>().map_err(|_| err(format!("bad number {w:?}")))).collect()
        };
        match key {
            "wall" => {
                let v = nums(words)?;
                if v.len() != 4 {
                    return Err(err(format!("wall takes 4 numbers, got {}", v.len())));
                }
                let wall = Wall { a: Point::new(v[0], v[1]), b: Point::new(v[2], v[3]) };
                if wall.a == wall.b {
                    return Err(err("zero-length wall".into()));
                }
                self.walls.push(wall);
            }
            "poly" => {
                let v = nums(words)?;
                let Some(&count) = v.first() else { return Err(err("poly needs a point count".into())) };
                let n = count as usize;
                if count.fract() != 0.0 || n < 3 || v.len() != 1 + 2 * n {
                    return Err(err(format!("poly {count} expects {} coordinates", 2.0 * count)));
                }
                let pts = v[1..].chunks(2).map(|c| Point::new(c[0], c[1])).collect();
                self.polygons.push(Polygon::new(pts));
            }
            "pairwise" => {
                self.pairwise = match words.next() {
                    Some("on") => true,
                    Some("off") => false,
                    other => return Err(err(format!("pairwise expects on|off, got {other:?}"))),
                };
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl FromStr for ColliderScene {
    type Err = CollisionError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut scene = ColliderScene::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !scene.parse_line(line, i + 1)? {
                let key = line.split_whitespace().next().unwrap_or("");
                return Err(CollisionError::Scene { line: i + 1, reason: format!("unknown keyword {key:?}") });
            }
        }
        Ok(scene)
    }
}

/// Contacts of samples against walls and polygons, ordered by sample index.
pub fn detect_static(samples: &OutlineSamples, scene: &ColliderScene) -> ContactSet {
    let mut contacts = Vec::new();
    for (i, s) in samples.samples.iter().enumerate() {
        let p = s.position;
        for (w, wall) in scene.walls.iter().enumerate() {
            let d = wall.b - wall.a;
            let u = (p - wall.a).dot(d) / d.norm_squared();
            let normal = wall.normal();
            let depth = normal.dot(p - wall.a);
            if depth < 0.0 && (0.0..=1.0).contains(&u) {
                let b = wall.a + d * u;
                contacts.push(Contact { sample: i, b, normal, depth, source: ContactSource::Wall(w) });
            }
        }
        for (k, poly) in scene.polygons.iter().enumerate() {
            if !poly.contains(p) {
                continue;
            }
            let (b, mut normal, edge) = poly.nearest_boundary(p);
            let mut depth = normal.dot(p - b);
            if depth >= 0.0 {
                // nearest point is a reflex vertex or a self-crossing; push straight toward it
                let gap = b - p;
                let len = gap.norm();
                if len == 0.0 {
                    continue;
                }
                normal = gap * (1.0 / len);
                depth = -len;
            }
            if depth < 0.0 {
                contacts.push(Contact { sample: i, b, normal, depth, source: ContactSource::Polygon { index: k, edge } });
            }
        }
    }
    ContactSet { contacts }
}

/// Samples of glyph `a` inside glyph `b`, judged by nonzero winding over b's
/// sampled outline. Each contact is anchored at the projection onto b's curve.
pub fn detect_pairwise(samples: &OutlineSamples, layout: &WordLayout, a: usize, b: usize) -> ContactSet {
    let mut contacts = Vec::new();
    if a == b {
        return ContactSet { contacts };
    }
    let (Some(ba), Some(bb)) = (samples.glyph_bounds(a), samples.glyph_bounds(b)) else {
        return ContactSet { contacts };
    };
    if !ba.overlaps(&bb) {
        return ContactSet { contacts };
    }
    let polylines = samples.polylines(b);
    let others: Vec<&OutlineSample> = samples.samples.iter().filter(|s| s.glyph == b).collect();
    for (i, s) in samples.samples.iter().enumerate().filter(|(_, s)| s.glyph == a) {
        let p = s.position;
        let winding: i32 = polylines.iter().map(|poly| winding_number(p, poly)).sum();
        if winding == 0 {
            continue;
        }
        let nearest = others
            .iter()
            .min_by(|x, y| x.position.distance(p).total_cmp(&y.position.distance(p)))
            .expect("glyph b has samples");
        let Ok((t, point, normal)) = nearest_on_cubic(p, &layout.segment_controls(nearest.segment)) else {
            continue;
        };
        let depth = normal.dot(p - point);
        if depth < 0.0 {
            contacts.push(Contact {
                sample: i,
                b: point,
                normal,
                depth,
                source: ContactSource::Glyph { glyph: b, segment: nearest.segment, t },
            });
        }
    }
    ContactSet { contacts }
}

/// Static contacts followed by pairwise contacts in both directions of every
/// glyph pair, when the scene enables them.
pub fn detect_all(samples: &OutlineSamples, layout: &WordLayout, scene: &ColliderScene) -> ContactSet {
    let mut set = detect_static(samples, scene);
    if scene.pairwise {
        let l = layout.glyph_count();
        for a in 0..l {
            for b in 0..l {
                if a != b {
                    set.contacts.extend(detect_pairwise(samples, layout, a, b).contacts);
                }
            }
        }
    }
    set
}

/// Deepest penetration of the layout's samples into the scene.
pub fn max_penetration(layout: &WordLayout, scene: &ColliderScene, density: usize) -> f64 {
    detect_all(&sample_outline(layout, density), layout, scene).max_penetration()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_cubic(a: Point, b: Point) -> [Point; 4] {
        [a, a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0), b]
    }

    #[test]
    fn wall_contact_depth_sign() {
        let scene: ColliderScene = "wall -100 0 100 0".parse().unwrap();
        assert_eq!(scene.walls[0].normal(), Point::new(0.0, 1.0));
        let samples = OutlineSamples {
            samples: vec![
                OutlineSample { glyph: 0, contour: 0, segment: 0, t: 0.0, position: Point::new(5.0, -3.0) },
                OutlineSample { glyph: 0, contour: 0, segment: 0, t: 0.5, position: Point::new(5.0, 0.0) },
                OutlineSample { glyph: 0, contour: 0, segment: 0, t: 1.0, position: Point::new(5.0, 2.0) },
            ],
            density: 3,
        };
        let set = detect_static(&samples, &scene);
        assert_eq!(set.len(), 1);
        assert_eq!(set.contacts[0].depth, -3.0);
        assert_eq!(set.contacts[0].b, Point::new(5.0, 0.0));
        assert_eq!(set.contacts[0].penetration(), 3.0);
    }

    #[test]
    fn nearest_on_line_cubic_matches_projection() {
        let c = line_cubic(Point::new(0.0, 0.0), Point::new(10.0, 5.0));
        for p in [Point::new(3.0, 7.0), Point::new(8.0, -2.0), Point::new(5.0, 2.5)] {
            let (t, q, _) = nearest_on_cubic(p, &c).unwrap();
            let (u, r) = project_on_segment(p, c[0], c[3]);
            assert!((t - u).abs() < 1e-9 && q.distance(r) < 1e-9, "{p:?}");
        }
        let (t, _, _) = nearest_on_cubic(Point::new(30.0, 15.0), &c).unwrap();
        assert_eq!(t, 1.0);
        assert_eq!(nearest_on_cubic(Point::ZERO, &[Point::ZERO; 4]), Err(CollisionError::DegenerateSegment));
    }

    #[test]
    fn normal_points_away_from_left_fill() {
        // rightward edge with fill on its left (above): outward is down
        let c = line_cubic(Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let (_, _, n) = nearest_on_cubic(Point::new(5.0, 1.0), &c).unwrap();
        assert!((n - Point::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn polygon_orientation_and_nearest() {
        let poly = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(0.0, 10.0), Point::new(10.0, 10.0), Point::new(10.0, 0.0)]);
        assert!(signed_area(poly.points()) > 0.0);
        let (b, n, _) = poly.nearest_boundary(Point::new(2.0, 5.0));
        assert_eq!(b, Point::new(0.0, 5.0));
        assert_eq!(n, Point::new(-1.0, 0.0));
    }

    #[test]
    fn scene_parsing() {
        let scene: ColliderScene = "# floor\nwall 0 0 1 0\npoly 3 0 0 1 0 0 1\npairwise on\n".parse().unwrap();
        assert_eq!((scene.walls.len(), scene.polygons.len(), scene.pairwise), (1, 1, true));
        assert!("poly 3 0 0 1".parse::<ColliderScene>().is_err());
        assert!("blob".parse::<ColliderScene>().is_err());
        assert!("pairwise maybe".parse::<ColliderScene>().is_err());
    }
}
