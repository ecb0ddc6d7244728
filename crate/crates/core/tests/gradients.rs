//! Analytic Jacobians against central differences and their structural rules.

use std::path::PathBuf;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfgrad_core::diff::{
    curve_point_jacobian, d_region_scalar, d_support, evaluate_word, glyph_jacobian, gradcheck, word_jacobian,
    GradcheckConfig,
};
use vfgrad_core::font::{parse_font, FontModel, GlyphId, Region, Tent};
use vfgrad_core::interp::{evaluate_curve, region_scalar, support_scalar, Curves, WordTheta};

fn font(name: &str) -> FontModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}.ttf"));
    parse_font(&std::fs::read(path).unwrap()).unwrap()
}

fn word(model: &FontModel, text: &str) -> Vec<GlyphId> {
    model.glyphs_for_text(text).unwrap()
}

fn cases() -> Vec<(&'static str, FontModel, Vec<GlyphId>)> {
    let f1 = font("fix1");
    let f2 = font("fix2");
    let f3 = font("fix3");
    let rf = font("roboto-flex-I");
    let w1 = word(&f1, "II");
    let w2 = word(&f2, "Ol");
    let w3 = word(&f3, "IL \u{2016}");
    let wr = word(&rf, "I");
    vec![("fix1", f1, w1), ("fix2", f2, w2), ("fix3", f3, w3), ("roboto-flex-I", rf, wr)]
}

#[test]
fn gradcheck_passes_on_every_fixture() {
    for (name, model, glyphs) in cases() {
        let report = gradcheck(&model, &glyphs, &GradcheckConfig::default());
        assert_eq!(report.samples, 100, "{name}");
        assert!(report.passed(1e-4), "{name}: max rel error {}", report.max_rel_error);
    }
}

#[test]
fn corrupted_jacobian_fails_gradcheck() {
    for (name, model, glyphs) in cases() {
        let config = GradcheckConfig { samples: 5, corrupt: true, ..Default::default() };
        let report = gradcheck(&model, &glyphs, &config);
        assert!(!report.passed(1e-4), "{name}");
    }
}

#[test]
fn gradcheck_is_deterministic() {
    let model = font("fix2");
    let glyphs = word(&model, "Ol");
    let config = GradcheckConfig { samples: 10, seed: 42, ..Default::default() };
    assert_eq!(gradcheck(&model, &glyphs, &config), gradcheck(&model, &glyphs, &config));
}

#[test]
fn fix1_column_is_the_delta_set() {
    let model = font("fix1");
    let g = word(&model, "I")[0];
    let jac = glyph_jacobian(&model, g, &[0.5]).unwrap();
    let delta = &model.glyph(g).unwrap().deltas[0];
    assert_eq!(jac.ncols(), 1);
    for (i, d) in delta.iter().enumerate() {
        assert_eq!(jac[(2 * i, 0)], d.x);
        assert_eq!(jac[(2 * i + 1, 0)], d.y);
    }
}

#[test]
fn zero_slope_cell_gives_zero_matrix() {
    let model = font("fix1");
    let g = word(&model, "I")[0];
    let jac = glyph_jacobian(&model, g, &[-0.5]).unwrap();
    assert!(jac.iter().all(|&v| v == 0.0));
    // the space glyph only varies on the positive wght side
    let f3 = font("fix3");
    let space = word(&f3, " ")[0];
    let jac = glyph_jacobian(&f3, space, &[-0.3, 0.2, 0.7]).unwrap();
    assert!(jac.iter().all(|&v| v == 0.0));
}

#[test]
fn region_gradient_matches_finite_differences() {
    let region = Region::new(vec![(0, Tent::new(0.0, 0.5, 1.0)), (1, Tent::new(-1.0, -0.5, 0.0))]);
    let h = 1e-5;
    for w in [[0.3, -0.2], [0.7, -0.8], [0.45, -0.55]] {
        let g = d_region_scalar(&region, &w);
        for a in 0..2 {
            let (mut p, mut m) = (w, w);
            p[a] += h;
            m[a] -= h;
            let fd = (region_scalar(&region, &p) - region_scalar(&region, &m)) / (2.0 * h);
            assert!((g[a] - fd).abs() < 1e-6, "{w:?} axis {a}: {} vs {fd}", g[a]);
        }
    }
}

#[test]
fn single_glyph_word_subtracts_left_phantom() {
    for (name, model, glyphs) in cases() {
        let g = glyphs[0];
        let n = model.axis_count();
        let w: Vec<f64> = (0..n).map(|a| 0.13 + 0.07 * a as f64).collect();
        let gj = glyph_jacobian(&model, g, &w).unwrap();
        let wj = word_jacobian(&model, &[g], &WordTheta::from_flat(n, w.clone()).unwrap()).unwrap();
        let l = model.glyph(g).unwrap().left_phantom_index();
        assert_eq!(gj.shape(), wj.shape(), "{name}");
        for r in 0..gj.nrows() {
            for c in 0..n {
                let expected = if r % 2 == 0 { gj[(r, c)] - gj[(2 * l, c)] } else { gj[(r, c)] };
                assert_eq!(wj[(r, c)], expected, "{name} row {r} col {c}");
            }
        }
    }
}

#[test]
fn word_jacobian_is_causal() {
    let model = font("fix3");
    let glyphs = word(&model, "ILI");
    let n = model.axis_count();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta: Vec<f64> = (0..n * glyphs.len()).map(|_| rng.random_range(-0.9..0.9)).collect();
    let eval = evaluate_word(&model, &glyphs, &WordTheta::from_flat(n, theta).unwrap()).unwrap();
    let layout = &eval.layout;
    for j in 0..glyphs.len() {
        let rows = 2 * layout.starts[j]..2 * (layout.starts[j] + layout.instances[j].points.len());
        for z in j + 1..glyphs.len() {
            for r in rows.clone() {
                for c in z * n..(z + 1) * n {
                    assert_eq!(eval.jacobian[(r, c)], 0.0, "glyph {j} row {r} col {c}");
                }
            }
        }
    }
    // earlier glyphs' wght moves later glyphs through the pen position
    let later = 2 * layout.starts[2];
    assert!(eval.jacobian[(later, 0)] != 0.0);
}

#[test]
fn word_jacobian_matches_finite_differences_with_composites() {
    let model = font("fix3");
    let glyphs = word(&model, "\u{2016}L");
    let report = gradcheck(&model, &glyphs, &GradcheckConfig { samples: 20, seed: 9, ..Default::default() });
    assert!(report.rows.iter().any(|r| r.target.starts_with("word")));
    assert!(report.passed(1e-4), "{}", report.max_rel_error);
}

fn flat_curve_point(model: &FontModel, glyphs: &[GlyphId], theta: &[f64], s: usize, t: f64) -> [f64; 2] {
    let n = model.axis_count();
    let layout = vfgrad_core::interp::layout_word(model, glyphs, &WordTheta::from_flat(n, theta.to_vec()).unwrap())
        .unwrap();
    let p = evaluate_curve(&layout, s, t).unwrap();
    [p.x, p.y]
}

#[test]
fn curve_point_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, model, glyphs) in cases() {
        let n = model.axis_count();
        for _ in 0..10 {
            let theta: Vec<f64> = (0..n * glyphs.len()).map(|_| rng.random_range(-0.95..0.95)).collect();
            let eval = evaluate_word(&model, &glyphs, &WordTheta::from_flat(n, theta.clone()).unwrap()).unwrap();
            let segs = eval.layout.segments().len();
            let s = rng.random_range(0..segs);
            let t: f64 = rng.random_range(0.0..1.0);
            let analytic = eval.curve_point_jacobian(s, t);
            let h = 1e-5;
            for c in 0..theta.len() {
                let (mut p, mut m) = (theta.clone(), theta.clone());
                p[c] += h;
                m[c] -= h;
                let (fp, fm) = (flat_curve_point(&model, &glyphs, &p, s, t), flat_curve_point(&model, &glyphs, &m, s, t));
                for r in 0..2 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    let err = (analytic[(r, c)] - fd).abs() / fd.abs().max(1.0);
                    assert!(err < 1e-4, "{name} seg {s} t {t} col {c}: {} vs {fd}", analytic[(r, c)]);
                }
            }
        }
    }
}

#[test]
fn curve_point_jacobian_at_start_is_first_control_rows() {
    let model = font("fix2");
    let glyphs = word(&model, "O");
    let eval = evaluate_word(&model, &glyphs, &WordTheta::uniform(&[0.3, -0.4], 1)).unwrap();
    let seg = eval.layout.segments()[2];
    let at0 = curve_point_jacobian(&eval.jacobian, &seg, 0.0);
    let first: DMatrix<f64> = eval.jacobian.rows(2 * seg[0], 2).into_owned();
    assert_eq!(at0, first);
}

#[test]
fn single_axis_slope_is_constant_per_cell() {
    let tents = [Tent::new(0.0, 1.0, 1.0), Tent::new(0.0, 0.5, 1.0), Tent::new(-1.0, -0.5, 0.0), Tent::new(-1.0, -1.0, 0.0)];
    for tent in tents {
        let mut cuts = vec![-1.0, tent.start, tent.peak, tent.end, 1.0];
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for cell in cuts.windows(2) {
            let (lo, hi) = (cell[0], cell[1]);
            let slopes: Vec<f64> = (0..10).map(|q| d_support(tent, lo + (hi - lo) * (q as f64 + 0.5) / 10.0)).collect();
            assert!(slopes.iter().all(|&s| s == slopes[0]), "{tent:?} cell [{lo}, {hi}]: {slopes:?}");
        }
    }
}

fn arb_tent() -> impl Strategy<Value = Tent> {
    (-1.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0).prop_filter_map("valid tent", |(a, b, c)| {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let t = Tent::new(v[0], v[1], v[2]);
        (t.peak != 0.0 && !(t.start < 0.0 && t.end > 0.0)).then_some(t)
    })
}

proptest! {
    #[test]
    fn gradient_vanishes_outside_support(t0 in arb_tent(), t1 in arb_tent(), w0 in -1.0f64..=1.0, w1 in -1.0f64..=1.0) {
        let region = Region::new(vec![(0, t0), (1, t1)]);
        let outside = |t: Tent, w: f64| w < t.start || w > t.end;
        if outside(t0, w0) || outside(t1, w1) {
            prop_assert_eq!(d_region_scalar(&region, &[w0, w1]), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn gradient_is_product_rule(t0 in arb_tent(), t1 in arb_tent(), w0 in -1.0f64..=1.0, w1 in -1.0f64..=1.0) {
        let region = Region::new(vec![(0, t0), (1, t1)]);
        let g = d_region_scalar(&region, &[w0, w1]);
        prop_assert_eq!(g[0], d_support(t0, w0) * support_scalar(t1, w1));
        prop_assert_eq!(g[1], d_support(t1, w1) * support_scalar(t0, w0));
    }

    #[test]
    fn jacobian_shape_matches_instance(seed in 0u64..1000) {
        let model = font("fix3");
        let glyphs = word(&model, "IL");
        let n = model.axis_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let eval = evaluate_word(&model, &glyphs, &WordTheta::from_flat(n, theta).unwrap()).unwrap();
        prop_assert_eq!(eval.jacobian.nrows(), 2 * eval.layout.points.len());
        prop_assert_eq!(eval.jacobian.ncols(), 2 * n);
    }
}
