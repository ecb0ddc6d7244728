//! Time stepping: closed-form steps, trajectory invariants and a floor drop.

mod common;

use common::{font, word};
use proptest::prelude::*;
use vfgrad_core::collide::max_penetration;
use vfgrad_core::interp::{layout_word, WordTheta};
use vfgrad_core::sim::{export_frames, frame_name, predict, run, step, trajectory_penetration, SimScript, SimState};
use vfgrad_core::solve::SolverConfig;

fn state(theta: &[f64], velocity: &[f64], axes: usize) -> SimState {
    SimState { theta: WordTheta::from_flat(axes, theta.to_vec()).unwrap(), velocity: velocity.to_vec(), time: 0.0 }
}

fn one_axis_script(stiffness: f64, mass: f64, dt: f64, rest: f64) -> SimScript {
    SimScript { dt, stiffness, mass, rest: vec![(0.0, vec![rest])], ..Default::default() }
}

#[test]
fn rest_state_is_a_fixed_point() {
    let model = font("fix3");
    let g = word(&model, "IL");
    let theta = [0.2, -0.3, 0.0, 0.5, 0.1, -0.4];
    let script = SimScript { rest: vec![(0.0, theta.to_vec())], steps: 3, ..Default::default() };
    let s0 = state(&theta, &[0.0; 6], 3);
    let s1 = step(&model, &g, &s0, &script, 1, &SolverConfig::default()).unwrap();
    assert_eq!(s1.theta, s0.theta);
    assert!(s1.velocity.iter().all(|&v| v == 0.0));
    let traj = run(&model, &g, &script, s0.clone(), &SolverConfig::default()).unwrap();
    assert_eq!(traj.len(), 4);
    assert!(traj.iter().all(|s| s.theta == s0.theta));
}

#[test]
fn quadratic_step_matches_closed_form() {
    let model = font("fix1");
    let g = word(&model, "I");
    let config = SolverConfig::default();
    for &(a, mass, dt, rest, theta, v) in &[
        (30.0, 0.5, 0.1, 0.6, 0.2, 0.5),
        (1.0, 1.0, 1.0 / 60.0, -0.8, 0.3, -2.0),
        (250.0, 2.0, 0.05, 0.0, -0.9, 4.0),
    ] {
        let script = one_axis_script(a, mass, dt, rest);
        let s0 = state(&[theta], &[v], 1);
        let tm: f64 = (theta + dt * v).clamp(-1.0, 1.0);
        let b = mass / (dt * dt);
        let expected = (a * rest + b * tm) / (a + b);
        let s1 = step(&model, &g, &s0, &script, 1, &config).unwrap();
        let got = s1.theta.as_slice()[0];
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
        assert_eq!(s1.velocity[0] * dt, got - theta);
    }
}

#[test]
fn zero_stiffness_follows_momentum() {
    let model = font("fix3");
    let g = word(&model, "I");
    let script = SimScript { stiffness: 0.0, dt: 0.1, ..Default::default() };
    let s0 = state(&[0.0, 0.2, -0.1], &[0.5, 1.0, -0.3], 3);
    let predicted = predict(&s0, 0.1, &[0.0; 3]);
    assert_eq!(predicted, vec![0.05, 0.30000000000000004, -0.13]);
    let s1 = step(&model, &g, &s0, &script, 1, &SolverConfig::default()).unwrap();
    assert_eq!(s1.theta.as_slice(), predicted.as_slice());
}

#[test]
fn prediction_clamps_and_applies_impulses() {
    let s0 = state(&[0.9, -0.2], &[5.0, 0.0], 1);
    assert_eq!(predict(&s0, 0.1, &[0.0, 0.0]), vec![1.0, -0.2]);
    assert_eq!(predict(&s0, 0.1, &[-5.0, 1.0]), vec![0.9, -0.1]);
    let still = state(&[0.3], &[0.0], 1);
    assert_eq!(predict(&still, 0.5, &[0.0]), vec![0.3]);
}

#[test]
fn trajectories_are_deterministic_and_consistent() {
    let model = font("fix3");
    let g = word(&model, "IL");
    let script: SimScript = "dt 0.02\nsteps 25\nstiffness 40\nrest 0 0 0 0 0 0 0\nrest 0.2 0.8 0.5 0 -0.5 0.2 0\nimpulse 0.1 0 0 0 2 0 0\n"
        .parse()
        .unwrap();
    let s0 = SimState::at_rest(WordTheta::zeros(3, 2));
    let config = SolverConfig::default();
    let a = run(&model, &g, &script, s0.clone(), &config).unwrap();
    let b = run(&model, &g, &script, s0, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 26);
    for w in a.windows(2) {
        for ((t1, t0), v) in w[1].theta.as_slice().iter().zip(w[0].theta.as_slice()).zip(&w[1].velocity) {
            assert_eq!(*v, (t1 - t0) / script.dt);
            assert!((v * script.dt - (t1 - t0)).abs() <= 1e-15);
            assert!((-1.0..=1.0).contains(t1));
        }
        assert!((w[1].time - w[0].time - script.dt).abs() < 1e-12);
    }
    // the rest pose switches at 0.2 and the trajectory moves toward it
    let last = a.last().unwrap().theta.as_slice();
    assert!(last[0] > 0.3 && last[1] > 0.2);
}

#[test]
fn zero_steps_is_the_initial_state() {
    let model = font("fix1");
    let g = word(&model, "I");
    let s0 = state(&[0.4], &[1.0], 1);
    let traj = run(&model, &g, &SimScript::default(), s0.clone(), &SolverConfig::default()).unwrap();
    assert_eq!(traj, vec![s0]);
    let bad = SimScript { dt: 0.0, ..Default::default() };
    assert!(run(&model, &g, &bad, SimState::at_rest(WordTheta::zeros(1, 1)), &SolverConfig::default()).is_err());
}

fn drop_script() -> SimScript {
    let text = std::fs::read_to_string(common::fixtures().join("scenarios/drop.sim")).unwrap();
    text.parse().unwrap()
}

#[test]
fn dropped_word_stays_above_the_floor() {
    let model = font("fix3");
    let g = word(&model, "IL");
    let script = drop_script();
    assert_eq!(script.steps, 120);
    let traj = run(&model, &g, &script, SimState::at_rest(WordTheta::zeros(3, 2)), &SolverConfig::default()).unwrap();
    assert_eq!(traj.len(), 121);
    let worst = trajectory_penetration(&model, &g, &traj, &script);
    assert!(worst <= 0.5, "penetration {worst}");
    // it does reach the floor: the drop axis passes the contact threshold
    let deepest = traj.iter().map(|s| s.theta.as_slice()[2]).fold(f64::MIN, f64::max);
    assert!(deepest > 0.45, "max drop {deepest}");
    let free = SimScript { scene: Default::default(), ..script.clone() };
    let fall = run(&model, &g, &free, SimState::at_rest(WordTheta::zeros(3, 2)), &SolverConfig::default()).unwrap();
    let through = fall
        .iter()
        .map(|s| max_penetration(&layout_word(&model, &g, &s.theta).unwrap(), &script.scene, script.density))
        .fold(0.0, f64::max);
    assert!(through > 10.0, "without the floor the word falls through: {through}");
}

#[test]
fn frames_are_numbered_files() {
    let model = font("fix3");
    let g = word(&model, "I");
    let script: SimScript = "dt 0.05\nsteps 3\nimpulse 0 1 0 0".parse().unwrap();
    let traj = run(&model, &g, &script, SimState::at_rest(WordTheta::zeros(3, 1)), &SolverConfig::default()).unwrap();
    let dir = std::env::temp_dir().join(format!("vfgrad-frames-{}", std::process::id()));
    assert_eq!(export_frames(&model, &g, &traj, &dir).unwrap(), 4);
    for i in 0..4 {
        let text = std::fs::read_to_string(dir.join(frame_name(i))).unwrap();
        assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    }
    assert!(dir.join("frame_00003.svg").exists() && !dir.join("frame_00004.svg").exists());
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn one_axis_closed_form(a in 0.0f64..100.0, mass in 0.1f64..5.0, rest in -1.0f64..1.0, theta in -1.0f64..1.0, v in -3.0f64..3.0) {
        let model = font("fix1");
        let g = word(&model, "I");
        let dt = 0.05;
        let s1 = step(&model, &g, &state(&[theta], &[v], 1), &one_axis_script(a, mass, dt, rest), 1, &SolverConfig::default()).unwrap();
        let tm = (theta + dt * v).clamp(-1.0, 1.0);
        let b = mass / (dt * dt);
        let expected = (a * rest + b * tm) / (a + b);
        prop_assert!((s1.theta.as_slice()[0] - expected).abs() < 1e-10);
    }
}
