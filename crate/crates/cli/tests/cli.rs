//! Command behavior: exit codes, goldens, metrics lines and output files.

mod common;

use common::*;

#[test]
fn inspect_matches_goldens() {
    for name in ["fix1", "fix2", "fix3", "roboto-flex-I"] {
        let o = vfgrad(["inspect", path_str(&fixture(&format!("{name}.ttf")))]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let golden = std::fs::read_to_string(fixture(&format!("golden/{name}.inspect.txt"))).unwrap();
        assert_eq!(stdout(&o), golden, "{name}");
    }
}

#[test]
fn inspect_json_and_errors() {
    let o = vfgrad(["inspect", "--json", path_str(&fixture("fix3.ttf"))]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["axis_count"], 3);
    assert_eq!(v["axes"][1]["tag"], "HGHT");
    let i = v["glyphs"].as_array().unwrap().iter().find(|g| g["chars"] == serde_json::json!([0x49])).unwrap();
    assert_eq!((i["k"].as_u64(), i["m"].as_u64(), i["segments"].as_u64()), (Some(12), Some(6), Some(4)));

    let o = vfgrad(["inspect", path_str(&fixture("static.ttf"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fvar"));
    let o = vfgrad(["inspect", "/nonexistent/font.ttf"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vfgrad(["inspect", "--trace", "x.csv", path_str(&fixture("fix1.ttf"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = vfgrad(["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn instance_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i.svg");
    let o = vfgrad(["instance", path_str(&fixture("fix1.ttf")), "--text", "I", "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(fixture("golden/fix1-I.svg")).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), golden);
    assert_eq!(metrics(&o)["weights"], "0");

    let heavy = dir.path().join("heavy.svg");
    let o = vfgrad(["instance", path_str(&fixture("fix1.ttf")), "--text", "I", "--axis", "wght=900", "-o", path_str(&heavy)]);
    assert!(o.status.success());
    assert_eq!(metrics(&o)["weights"], "1");
    assert_ne!(std::fs::read(&heavy).unwrap(), golden.as_bytes());

    let o = vfgrad(["instance", path_str(&fixture("fix3.ttf")), "--text", "IL", "--axis", "wght=250", "--axis", "DROP=50", "-o", path_str(&heavy)]);
    assert_eq!(metrics(&o)["weights"], "-0.5,0,0.5");
}

#[test]
fn instance_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.svg");
    let font = fixture("fix1.ttf");
    let o = vfgrad(["instance", path_str(&font), "--text", "I", "--axis", "wdth=100", "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown axis"));
    let o = vfgrad(["instance", path_str(&font), "--text", "IQé", "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("U+0051, U+00E9"), "{}", stderr(&o));
    let o = vfgrad(["instance", path_str(&font), "--text", "I", "--axis", "wght", "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = vfgrad(["instance", path_str(&font), "--text", "I", "--axis", "wght=nan", "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn gradcheck_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("g.csv");
    let font = fixture("fix2.ttf");
    let o = vfgrad(["gradcheck", path_str(&font), "--samples", "20", "--trace", path_str(&trace)]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(metrics(&o)["passed"], "true");
    assert!(metric_f64(&o, "max_rel_error") < 1e-4);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("target,axis,max_rel_error\n"));
    assert!(csv.lines().count() > 2);

    let o = vfgrad(["gradcheck", path_str(&font), "--samples", "5", "--corrupt-jacobian"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(metrics(&o)["passed"], "false");

    let o = vfgrad(["gradcheck", path_str(&font), "--samples", "0"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert_eq!(metrics(&o)["samples"], "0");

    let o = vfgrad(["gradcheck", path_str(&font), "--text", "Z"]);
    assert_eq!(o.status.code(), Some(2));
}

fn scenario(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn drag_reports_metrics_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let svg = dir.path().join("d.svg");
    let o = vfgrad(["drag", path_str(&fixture("scenarios/drag.scn")), "--trace", path_str(&trace), "-o", path_str(&svg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&o);
    assert!(m["residual"].parse::<f64>().unwrap() < 0.5);
    assert_eq!(m["monotone"], "true");
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().next(), Some("iteration,energy,damping,step_norm"));
    assert_eq!(csv.lines().count(), m["iterations"].parse::<usize>().unwrap() + 2);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn config_file_and_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "solver.cfg", "max_iterations = 1\n");
    let o = vfgrad(["drag", path_str(&fixture("scenarios/drag.scn")), "--config", path_str(&cfg)]);
    assert!(o.status.success());
    assert_eq!(metrics(&o)["iterations"], "1");
    let bad = scenario(dir.path(), "bad.cfg", "warp_speed = 9\n");
    let o = vfgrad(["drag", path_str(&fixture("scenarios/drag.scn")), "--config", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));

    let font = fixture("fix3.ttf");
    let body = format!(
        "font {}\ntext I\nhandle 2 0.5\ntarget 150 850\nconstraint same_y 2:0 2:1\nconstraint pin 0:0\nlambda 0.001\n",
        font.display()
    );
    let sc = scenario(dir.path(), "c.scn", &body);
    let o = vfgrad(["drag", path_str(&sc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(metric_f64(&o, "residual") < 1.0);
}

#[test]
fn scenario_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("empty.scn", "# nothing here\n\n"),
        ("typo.scn", "font ../fix1.ttf\ntext I\nhandel 1 0.5\ntarget 1 2\n"),
        ("twice.scn", "text I\ntext L\n"),
        ("nohandle.scn", "font x.ttf\ntext I\ntarget 1 2\n"),
        ("badt.scn", "handle 1 1.5\n"),
        ("matchkey.scn", "font x.ttf\ntext I\nhandle 1 0.5\ntarget 1 2\nsize 64\n"),
    ];
    for (name, body) in cases {
        let p = scenario(dir.path(), name, body);
        let o = vfgrad(["drag", path_str(&p)]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
    }
    let empty = scenario(dir.path(), "e.scn", "");
    for cmd in ["drag", "resolve", "simulate", "match"] {
        let o = vfgrad([cmd, path_str(&empty)]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("empty"));
    }
    let o = vfgrad(["drag", "/nonexistent.scn"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resolve_toggle() {
    let on = vfgrad(["resolve", path_str(&fixture("scenarios/resolve.scn"))]);
    assert!(on.status.success(), "{}", stderr(&on));
    assert_eq!(metrics(&on)["collision"], "true");
    assert!(metric_f64(&on, "max_penetration") < 0.5);
    let off = vfgrad(["resolve", "--no-collision", path_str(&fixture("scenarios/resolve.scn"))]);
    assert_eq!(metrics(&off)["collision"], "false");
    assert!(metric_f64(&off, "max_penetration") > 10.0);
    // plain drag leaves collision off unless the scenario turns it on
    let drag = vfgrad(["drag", path_str(&fixture("scenarios/resolve.scn"))]);
    assert_eq!(metrics(&drag)["collision"], "false");
}

#[test]
fn simulate_writes_frames() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    let trace = dir.path().join("sim.csv");
    let font = fixture("fix3.ttf");
    let body = format!("font {}\ntext I\ndt 0.05\nsteps 6\nstiffness 4\nimpulse 0 1 0 0\n", font.display());
    let sc = scenario(dir.path(), "s.scn", &body);
    let o = vfgrad(["simulate", path_str(&sc), "--out", path_str(&frames), "--trace", path_str(&trace)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&o);
    assert_eq!((m["steps"].as_str(), m["states"].as_str(), m["frames"].as_str()), ("6", "7", "7"));
    let mut names: Vec<String> = std::fs::read_dir(&frames).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.first().map(String::as_str), Some("frame_00000.svg"));
    assert_eq!(names.last().map(String::as_str), Some("frame_00006.svg"));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().next(), Some("frame,time,max_penetration,wght[0],HGHT[0],DROP[0]"));
    assert_eq!(csv.lines().count(), 8);
    let bad = scenario(dir.path(), "b.scn", &format!("font {}\ntext I\ndt 0\nsteps 2\n", font.display()));
    assert_eq!(vfgrad(["simulate", path_str(&bad)]).status.code(), Some(2));
}

#[test]
fn match_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let font = fixture("fix3.ttf");
    let body = format!("font {}\ntext I\ntarget_axes wght=600 HGHT=800\nsize 24\niterations 30\nlr 0.05\n", font.display());
    let sc = scenario(dir.path(), "m.scn", &body);
    let pgm = dir.path().join("fit.pgm");
    let o = vfgrad(["match", path_str(&sc), "--image-out", path_str(&pgm)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = metrics(&o);
    assert_eq!(m["iterations"], "30");
    assert!(m["reduction"].parse::<f64>().unwrap() > 0.5);
    assert!(m.contains_key("mean_distance"));
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5\n24 24\n255\n"));

    // a saved raster works as a target image
    let body = format!("font {}\ntext I\ntarget_image fit.pgm\nframe -100 -200 500 1000\nsize 24\niterations 5\n", font.display());
    let sc = scenario(dir.path(), "img.scn", &body);
    let o = vfgrad(["match", path_str(&sc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!metrics(&o).contains_key("mean_distance"));
    let wrong = format!("font {}\ntext I\ntarget_image fit.pgm\nframe -100 -200 500 1000\nsize 32\n", font.display());
    let sc = scenario(dir.path(), "wrong.scn", &wrong);
    assert_eq!(vfgrad(["match", path_str(&sc)]).status.code(), Some(2));
    let both = format!("font {}\ntext I\ntarget_image fit.pgm\ntarget_axes wght=500\nframe 0 0 1 1\n", font.display());
    let sc = scenario(dir.path(), "both.scn", &both);
    assert_eq!(vfgrad(["match", path_str(&sc)]).status.code(), Some(2));
}

#[test]
fn serve_rejects_bad_fonts() {
    let o = vfgrad(["serve", "--font", path_str(&fixture("static.ttf")), "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vfgrad(["serve", "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
