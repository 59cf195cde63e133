use std::path::Path;
use std::process::{Command, Output};

use guidesmith::fixtures::{dome, latitude_circle};
use guidesmith::mesh::{is_closed, load_stl, save_stl, submesh, StlFormat};
use guidesmith::Point3;

fn guidesmith(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guidesmith")).args(args).output().expect("binary runs")
}

fn fixtures(dir: &Path) {
    let out = guidesmith(&["fixtures", "--out-dir", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn generate(dir: &Path, axes: Option<&str>, out: &str, timings: &str) -> Output {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_owned();
    let mut args = vec![
        "--mesh".to_owned(),
        p("dome.stl"),
        "--contour".into(),
        p("dome_contour.txt"),
        "--thickness".into(),
        "2.5".into(),
        "--out".into(),
        p(out),
        "--timings".into(),
        p(timings),
    ];
    if let Some(a) = axes {
        args.extend(["--axes".to_owned(), p(a)]);
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    guidesmith(&refs)
}

#[test]
fn full_run_writes_a_closed_template_and_six_timing_lines() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = generate(dir.path(), None, "template.stl", "timings.txt");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mesh = load_stl(dir.path().join("template.stl")).unwrap();
    assert!(is_closed(&mesh));
    let report = std::fs::read_to_string(dir.path().join("timings.txt")).unwrap();
    let names: Vec<&str> = report.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "Inner surface segmentation",
            "Offset of inner surface",
            "Generation of points for outer surface segmentation",
            "Outer surface segmentation",
            "Connection of inner and outer surfaces",
            "Initial template generation",
        ]
    );
    for line in report.lines() {
        let secs: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!(secs >= 0.0);
    }
}

#[test]
fn tube_run_adds_the_boolean_row() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let out = generate(dir.path(), Some("dome_axes_1.txt"), "t.stl", "t.txt");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("t.txt")).unwrap();
    assert_eq!(report.lines().count(), 7);
    assert!(report.lines().last().unwrap().starts_with("Runtime of Boolean operation(s)\t"));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    for (out, t) in [("a.stl", "a.txt"), ("b.stl", "b.txt")] {
        assert!(generate(dir.path(), Some("dome_axes_2.txt"), out, t).status.success());
    }
    let a = std::fs::read(dir.path().join("a.stl")).unwrap();
    let b = std::fs::read(dir.path().join("b.stl")).unwrap();
    assert!(!a.is_empty());
    assert!(a == b);
}

#[test]
fn missing_mesh_is_a_usage_error() {
    let out = guidesmith(&["--contour", "c.txt", "--thickness", "2", "--out", "o.stl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--mesh"));
}

#[test]
fn malformed_seed_is_a_usage_error() {
    let out = guidesmith(&["--mesh", "m.stl", "--contour", "c.txt", "--thickness", "2", "--out", "o.stl", "--seed", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn contour_across_a_hole_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    // punch a hole where the contour passes
    let full = dome(10.0, 24, 96);
    let hole = latitude_circle(10.0, 40.0, 8)[0];
    let keep: Vec<u32> = (0..full.triangle_count() as u32)
        .filter(|&t| {
            let [a, b, c] = full.corners(t as usize);
            let centroid = Point3::from((a.coords + b.coords + c.coords) / 3.0);
            (centroid - hole).norm() > 1.0
        })
        .collect();
    let holed = submesh(&full, &keep).0;
    save_stl(&holed, dir.path().join("dome.stl"), StlFormat::Binary).unwrap();
    let out = generate(dir.path(), None, "x.stl", "x.txt");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("contour validation"), "{err}");
    assert!(!dir.path().join("x.stl").exists());
}

#[test]
fn stage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    std::fs::write(dir.path().join("bad_axes.txt"), "0 0 10 0 0 1 3 2 10\n").unwrap();
    let out = generate(dir.path(), Some("bad_axes.txt"), "y.stl", "y.txt");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("axes"));
}
