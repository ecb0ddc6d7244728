//! Small 2-D vector type shared by outlines, layouts and collision geometry.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// A point or displacement in font units (y up).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ZERO: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp_left(self) -> Point {
        Point::new(-self.y, self.x)
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, rhs: Point) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Point {
    #[inline]
    fn sub_assign(&mut self, rhs: Point) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Option<Bounds> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut b = Bounds { min: first, max: first };
        for p in iter {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(self, other: Bounds) -> Bounds {
        let mut b = self;
        b.include(other.min);
        b.include(other.max);
        b
    }

    pub fn overlaps(&self, other: &Bounds) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Cubic Bernstein basis at `t`.
#[inline]
pub fn bernstein3(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t]
}

/// Evaluates a cubic Bézier segment.
#[inline]
pub fn cubic_point(c: &[Point; 4], t: f64) -> Point {
    let b = bernstein3(t);
    c[0] * b[0] + c[1] * b[1] + c[2] * b[2] + c[3] * b[3]
}

/// First derivative of a cubic Bézier segment.
#[inline]
pub fn cubic_tangent(c: &[Point; 4], t: f64) -> Point {
    let s = 1.0 - t;
    (c[1] - c[0]) * (3.0 * s * s) + (c[2] - c[1]) * (6.0 * s * t) + (c[3] - c[2]) * (3.0 * t * t)
}

/// Second derivative of a cubic Bézier segment.
#[inline]
pub fn cubic_second(c: &[Point; 4], t: f64) -> Point {
    let s = 1.0 - t;
    (c[2] - c[1] * 2.0 + c[0]) * (6.0 * s) + (c[3] - c[2] * 2.0 + c[1]) * (6.0 * t)
}

/// Signed area of a closed polygon (positive for counter-clockwise).
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += points[i].cross(points[(i + 1) % n]);
    }
    0.5 * acc
}

/// Nonzero winding number of `p` with respect to a closed polyline.
pub fn winding_number(p: Point, polygon: &[Point]) -> i32 {
    let n = polygon.len();
    let mut winding = 0;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
            winding -= 1;
        }
    }
    winding
}

/// Even-odd inside test against a closed polygon.
pub fn inside_even_odd(p: Point, polygon: &[Point]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Closest point to `p` on segment `a`–`b`, with its parameter in [0, 1].
pub fn project_on_segment(p: Point, a: Point, b: Point) -> (f64, Point) {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (0.0, a);
    }
    let u = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    (u, a + d * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernstein_partition_of_unity() {
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let s: f64 = bernstein3(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn winding_and_even_odd_agree_on_square() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ];
        assert_eq!(winding_number(Point::new(5.0, 5.0), &sq), 1);
        assert!(inside_even_odd(Point::new(5.0, 5.0), &sq));
        assert_eq!(winding_number(Point::new(15.0, 5.0), &sq), 0);
        assert!(!inside_even_odd(Point::new(-1.0, 5.0), &sq));
        assert!(signed_area(&sq) > 0.0);
    }

    #[test]
    fn tangent_matches_finite_difference() {
        let c = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 3.0),
            Point::new(4.0, -2.0),
            Point::new(5.0, 1.0),
        ];
        let h = 1e-6;
        for &t in &[0.1, 0.5, 0.9] {
            let fd = (cubic_point(&c, t + h) - cubic_point(&c, t - h)) * (0.5 / h);
            let an = cubic_tangent(&c, t);
            assert!((fd - an).norm() < 1e-6);
            let fd2 = (cubic_tangent(&c, t + h) - cubic_tangent(&c, t - h)) * (0.5 / h);
            assert!((fd2 - cubic_second(&c, t)).norm() < 1e-5);
        }
    }
}
