//! Sampling, detection and contact frames on fixture outlines.

mod common;

use common::{font, word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfgrad_core::collide::{
    detect_all, detect_pairwise, detect_static, nearest_on_cubic, sample_outline, ColliderScene, ContactSource,
    OutlineSample, OutlineSamples, Polygon,
};
use vfgrad_core::geom::Point;
use vfgrad_core::interp::{compose, evaluate_curve, interpolate_glyph, layout_word, Curves, WordLayout, WordTheta};

fn rectangle_layout() -> WordLayout {
    let model = font("fix1");
    let g = word(&model, "I");
    layout_word(&model, &g, &WordTheta::zeros(1, 1)).unwrap()
}

fn on_rectangle(p: Point) -> bool {
    let (x0, x1, y0, y1) = (100.0, 200.0, 0.0, 700.0);
    let inside_x = p.x >= x0 - 1e-9 && p.x <= x1 + 1e-9;
    let inside_y = p.y >= y0 - 1e-9 && p.y <= y1 + 1e-9;
    inside_x && inside_y && ((p.x - x0).abs() < 1e-9 || (p.x - x1).abs() < 1e-9 || (p.y - y0).abs() < 1e-9 || (p.y - y1).abs() < 1e-9)
}

/// Crossing-number point-in-polygon, written independently of the library.
fn oracle_inside(p: Point, poly: &[Point]) -> bool {
    let mut crossings = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let straddles = (a.y <= p.y && b.y > p.y) || (b.y <= p.y && a.y > p.y);
        if straddles {
            let x_at = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x_at > p.x {
                crossings += 1;
            }
        }
    }
    crossings % 2 == 1
}

#[test]
fn density_two_keeps_segment_starts() {
    let layout = rectangle_layout();
    let s = sample_outline(&layout, 2);
    assert_eq!(s.len(), layout.segments().len());
    for (k, sample) in s.samples.iter().enumerate() {
        assert_eq!(sample.segment, k);
        assert_eq!(sample.t, 0.0);
        assert_eq!(sample.position, layout.points()[layout.segments()[k][0]]);
    }
}

#[test]
fn rectangle_samples_lie_on_edges() {
    let layout = rectangle_layout();
    let s = sample_outline(&layout, 8);
    let segs = layout.segments().len();
    assert_eq!(segs, 4);
    assert_eq!(s.len(), segs * 8 - segs);
    for seg in 0..segs {
        let ts: Vec<f64> = s.samples.iter().filter(|x| x.segment == seg).map(|x| x.t).collect();
        assert_eq!(ts.len(), 7);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }
    for x in &s.samples {
        assert!(on_rectangle(x.position), "{:?}", x.position);
        let direct = evaluate_curve(&layout, x.segment, x.t).unwrap();
        assert_eq!(direct, x.position);
    }
}

#[test]
fn samples_agree_with_curve_evaluation_on_all_fixtures() {
    for (name, text) in [("fix2", "Ol"), ("fix3", "IL\u{2016}"), ("roboto-flex-I", "I")] {
        let model = font(name);
        let g = word(&model, text);
        let layout = layout_word(&model, &g, &WordTheta::zeros(model.axis_count(), g.len())).unwrap();
        let s = sample_outline(&layout, 8);
        let closed_segments = layout.segments().len();
        assert_eq!(s.len(), closed_segments * 7, "{name}");
        for x in &s.samples {
            assert!((evaluate_curve(&layout, x.segment, x.t).unwrap() - x.position).norm() < 1e-12);
        }
    }
}

fn single(p: Point) -> OutlineSamples {
    OutlineSamples { samples: vec![OutlineSample { glyph: 0, contour: 0, segment: 0, t: 0.0, position: p }], density: 2 }
}

#[test]
fn static_detection_conventions() {
    let scene: ColliderScene = "wall -1000 0 1000 0\npoly 4 0 100 50 100 50 150 0 150".parse().unwrap();
    assert!(detect_static(&single(Point::new(500.0, 20.0)), &scene).is_empty());
    let deep = detect_static(&single(Point::new(10.0, -3.0)), &scene);
    assert_eq!(deep.len(), 1);
    assert_eq!(deep.contacts[0].depth, -3.0);
    assert_eq!(deep.contacts[0].normal, Point::new(0.0, 1.0));
    assert!(detect_static(&single(Point::new(10.0, 0.0)), &scene).is_empty());
    let boxed = detect_static(&single(Point::new(40.0, 120.0)), &scene);
    assert_eq!(boxed.len(), 1);
    let c = boxed.contacts[0];
    assert_eq!(c.b, Point::new(50.0, 120.0));
    assert_eq!(c.normal, Point::new(1.0, 0.0));
    assert!((c.depth + 10.0).abs() < 1e-12);
    assert!(matches!(c.source, ContactSource::Polygon { index: 0, .. }));
}

#[test]
fn contacts_satisfy_frame_invariants() {
    let scene: ColliderScene = "wall -1000 50 1000 50\npoly 5 120 300 260 320 300 500 180 560 90 420".parse().unwrap();
    let model = font("fix3");
    let g = word(&model, "IL");
    let layout = layout_word(&model, &g, &WordTheta::zeros(3, 2)).unwrap();
    let samples = sample_outline(&layout, 8);
    let set = detect_static(&samples, &scene);
    assert!(!set.is_empty());
    for c in &set.contacts {
        let p = samples.samples[c.sample].position;
        assert!((c.normal.norm() - 1.0).abs() < 1e-9);
        assert!((c.depth - c.normal.dot(p - c.b)).abs() < 1e-12);
        assert!(c.depth < 0.0);
        let eps = 1e-3;
        let moved = p + c.normal * eps;
        assert!(c.normal.dot(moved - c.b) > c.depth);
    }
    let ordered: Vec<usize> = set.contacts.iter().map(|c| c.sample).collect();
    assert!(ordered.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn polygon_classification_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shapes = [
        vec![(0.0, 0.0), (400.0, 0.0), (400.0, 300.0), (0.0, 300.0)],
        vec![(0.0, 0.0), (300.0, 50.0), (150.0, 120.0), (320.0, 300.0), (-20.0, 260.0)],
        vec![(50.0, 0.0), (100.0, 200.0), (0.0, 80.0), (200.0, 80.0), (10.0, 200.0)],
    ];
    for shape in shapes {
        let pts: Vec<Point> = shape.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let scene = ColliderScene { polygons: vec![Polygon::new(pts.clone())], ..Default::default() };
        let mut flagged = 0;
        for _ in 0..10_000 {
            let p = Point::new(rng.random_range(-50.0..450.0), rng.random_range(-50.0..350.0));
            let detected = !detect_static(&single(p), &scene).is_empty();
            assert_eq!(detected, oracle_inside(p, &pts), "{p:?}");
            flagged += detected as usize;
        }
        assert!(flagged > 100);
    }
}

fn overlapping_pair() -> WordLayout {
    let model = font("fix1");
    let g = word(&model, "I")[0];
    let a = interpolate_glyph(&model, g, &[0.0]).unwrap();
    let mut b = a.clone();
    // pull b's left phantom so it lands at x = 50, and lift it by 50
    let k = b.points.len();
    b.points[k - 2].x = 250.0;
    for p in &mut b.points[..k - 2] {
        p.y += 50.0;
    }
    compose(vec![g, g], vec![a, b])
}

#[test]
fn pairwise_flags_exactly_the_samples_inside_the_other_glyph() {
    let layout = overlapping_pair();
    let samples = sample_outline(&layout, 8);
    let b_corners: Vec<Point> =
        [(150.0, 50.0), (250.0, 50.0), (250.0, 750.0), (150.0, 750.0)].iter().map(|&(x, y)| Point::new(x, y)).collect();
    let expected: Vec<usize> = samples
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.glyph == 0 && oracle_inside(s.position, &b_corners))
        .map(|(i, _)| i)
        .collect();
    let set = detect_pairwise(&samples, &layout, 0, 1);
    let got: Vec<usize> = set.contacts.iter().map(|c| c.sample).collect();
    assert!(!expected.is_empty());
    assert_eq!(got, expected);
    for c in &set.contacts {
        assert!((c.normal.norm() - 1.0).abs() < 1e-9);
        assert!(c.depth < 0.0);
        assert!(matches!(c.source, ContactSource::Glyph { glyph: 1, .. }));
    }
    assert!(detect_pairwise(&samples, &layout, 0, 0).is_empty());
    let scene = ColliderScene { pairwise: true, ..Default::default() };
    let both = detect_all(&samples, &layout, &scene);
    let reverse = detect_pairwise(&samples, &layout, 1, 0);
    assert_eq!(both.len(), set.len() + reverse.len());
}

#[test]
fn pairwise_early_out_on_disjoint_bounds() {
    let model = font("fix3");
    let g = word(&model, "IL");
    let layout = layout_word(&model, &g, &WordTheta::zeros(3, 2)).unwrap();
    let samples = sample_outline(&layout, 8);
    assert!(detect_pairwise(&samples, &layout, 0, 1).is_empty());
    assert!(detect_pairwise(&samples, &layout, 1, 0).is_empty());
}

#[test]
fn nearest_on_curved_segment_beats_dense_scan() {
    let model = font("fix2");
    let g = word(&model, "O");
    let layout = layout_word(&model, &g, &WordTheta::zeros(2, 1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in 0..layout.segments().len() {
        let c = layout.segment_controls(s);
        for _ in 0..20 {
            let p = Point::new(rng.random_range(0.0..600.0), rng.random_range(0.0..700.0));
            let (t, q, n) = nearest_on_cubic(p, &c).unwrap();
            let scan = (0..=10_000)
                .map(|k| vfgrad_core::geom::cubic_point(&c, k as f64 / 10_000.0).distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!(q.distance(p) <= scan + 1e-6, "seg {s} {p:?}: {} vs {scan}", q.distance(p));
            assert!((0.0..=1.0).contains(&t));
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        let on = vfgrad_core::geom::cubic_point(&c, 0.37);
        let (t, q, _) = nearest_on_cubic(on, &c).unwrap();
        assert!(q.distance(on) < 1e-9 && (t - 0.37).abs() < 1e-6);
    }
}
