use std::f64::consts::PI;
use std::process::{Command, Output};

fn constxr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_constxr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn without_timestamp(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn synth_constant_profile_matches_closed_form() {
    let o = constxr(&["synth", "--profile", "1", "--grid", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,f,w"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (r, f) = (cols[0], cols[1]);
        let exact = 1.0 / (PI * (1.0 - r * r).sqrt());
        assert!((f - exact).abs() <= 1e-12 * exact, "r = {r}: {f} vs {exact}");
        rows += 1;
    }
    assert_eq!(rows, 100);
}

#[test]
fn verify_gaussian_passes() {
    let o = constxr(&["verify", "--profile", "exp(-r^2/2)", "--chords", "200", "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["passed"], true);
    assert_eq!(v["records"].as_array().unwrap().len(), 200);
    assert!(v["summary"]["max_abs_deviation"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn disctest_rejects_ellipse_by_width() {
    let o = constxr(&["disctest", "--shape", "ellipse 1 1.2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("width"), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["details"]["reason"], "width");
}

#[test]
fn disctest_accepts_disc_and_rejects_reuleaux() {
    let o = constxr(&["disctest", "--shape", "disc 0.3 -0.2 1.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = constxr(&["disctest", "--shape", "reuleaux 2 0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("harmonic"), "{}", stderr(&o));
}

#[test]
fn parse_error_reports_offset() {
    let o = constxr(&["synth", "--profile", "2+cos(4*r"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("offset 10"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(constxr(&["synth"]).status.code(), Some(2));
    assert_eq!(constxr(&["synth", "--profile", "1", "--profile-csv", "x.csv"]).status.code(), Some(2));
    assert_eq!(constxr(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(constxr(&["disctest", "--shape", "triangle 1"]).status.code(), Some(2));
    assert_eq!(constxr(&["synth", "--profile-csv", "/nonexistent/p.csv"]).status.code(), Some(2));
}

#[test]
fn herglotz_violation_is_a_rejection() {
    let o = constxr(&["herglotz", "--profile", "1 + 3*r^2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = constxr(&["synth", "--profile", "1 + 3*r^2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Herglotz"));
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let args = ["verify", "--profile", "1 + r^2/4", "--chords", "40", "--seed", "7"];
    let a = without_timestamp(&stdout(&constxr(&args)));
    let b = without_timestamp(&stdout(&constxr(&args)));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 7);
    let c = without_timestamp(&stdout(&constxr(&["verify", "--profile", "1 + r^2/4", "--chords", "40", "--seed", "8"])));
    assert_ne!(a["records"], c["records"]);
}

#[test]
fn profile_csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.csv");
    let mut text = String::from("r,c\n");
    for k in 0..=200 {
        let r = k as f64 / 200.0;
        text.push_str(&format!("{r},{}\n", (-r * r / 2.0).exp()));
    }
    std::fs::write(&profile, text).unwrap();
    let out = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let o = constxr(&[
        "verify",
        "--profile-csv",
        profile.to_str().unwrap(),
        "--chords",
        "20",
        "--tol",
        "1e-4",
        "--out",
        out.to_str().unwrap(),
        "--trace-csv",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("t,x,y,speed,clairaut"));
    assert!(t.lines().count() > 100);
}

#[test]
fn shape_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shape.csv");
    let mut text = String::from("theta,h\n");
    for k in 0..256 {
        let t = 2.0 * PI * k as f64 / 256.0;
        text.push_str(&format!("{t},{}\n", 2.0 + 0.5 * t.cos()));
    }
    std::fs::write(&path, text).unwrap();
    let o = constxr(&["disctest", "--shape", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn iiest_recovers_disc_curvature() {
    let o = constxr(&["iiest", "--shape", "disc 0 0 2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ii = v["details"]["estimate"].as_f64().unwrap();
    assert!((ii - 0.5).abs() < 1e-4, "{ii}");
    let o = constxr(&["iiest", "--shape", "sphere 1", "--format", "csv"]);
    assert!(stdout(&o).starts_with("h,raw,extrapolated\n"));
}

#[test]
fn iiest_rejects_point_off_boundary() {
    let o = constxr(&["iiest", "--shape", "sphere 1", "--point", "0.5,0,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn slicetest_sphere_and_ellipsoid() {
    assert_eq!(constxr(&["slicetest", "--shape", "sphere 2"]).status.code(), Some(0));
    let o = constxr(&["slicetest", "--shape", "ellipsoid 1 1.2 1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("non-umbilical"));
    assert_eq!(constxr(&["slicetest", "--shape", "disc 0 0 1"]).status.code(), Some(2));
}
