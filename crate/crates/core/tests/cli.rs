use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gcrkit"));
    c.env_remove("GCRKIT_THREADS");
    c
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn check(spec_path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["check", spec_path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_spec(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn special_sqrt2_report() {
    let r = json(&check(&spec("special_sqrt2.json"), &[]));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["flags"]["is_gcr"], true);
    assert_eq!(r["flags"]["is_3_minimal"], true);
    assert!(r.get("per_point").is_none());
    assert_eq!(r["engine"]["jet_order"], 3);
}

#[test]
fn syntax_error_exits_2_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(
        &dir,
        "bad.json",
        r#"{"name":"bad","components":["cos(s","t","u","0"],"variables":["s","t","u"],
            "domain":{"s":[0,1],"t":[0,1],"u":[0,1]}}"#,
    );
    let out = check(&p, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("offset 5"), "{err}");
}

#[test]
fn unknown_spec_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(&dir, "x.json", r#"{"name":"x","family":"special_sqrt2","colour":"red"}"#);
    assert_eq!(check(&p, &[]).status.code(), Some(2));
    let p = write_spec(&dir, "y.json", r#"{"name":"y","family":"special_sqrt2","grid":{"s":1,"t":2,"u":2}}"#);
    assert_eq!(check(&p, &[]).status.code(), Some(2));
    assert_eq!(check(&dir.path().join("missing.json"), &[]).status.code(), Some(2));
}

#[test]
fn hyperplane_is_flat_and_gcr() {
    let r = json(&check(&spec("hyperplane.json"), &["--full"]));
    assert_eq!(r["flags"]["is_gcr"], true);
    for p in r["per_point"].as_array().unwrap() {
        for h in p["H"].as_array().unwrap() {
            assert_eq!(h.as_f64().unwrap(), 0.0);
        }
    }
}

#[test]
fn families_listing() {
    let out = run(&["families"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let tags = text.lines().filter(|l| !l.starts_with(' ')).count();
    assert_eq!(tags, 8);
    let list = json(&run(&["families", "--json"]));
    assert_eq!(list.as_array().unwrap().len(), 8);
    assert_eq!(run(&["families", "--bogus"]).status.code(), Some(2));
}

#[test]
fn eval_dumps() {
    let r = json(&run(&["eval", spec("hyperplane.json").to_str().unwrap(), "--point", "1,2,3"]));
    assert!(r["k"].as_array().unwrap().iter().all(|k| k.as_f64() == Some(0.0)));
    assert!((r["mu"].as_f64().unwrap() - 14f64.sqrt()).abs() < 1e-15);

    let r = json(&run(&["eval", spec("special_sqrt2.json").to_str().unwrap(), "--point", "1,0,0"]));
    assert!((r["theta"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(r["H"][0].as_f64().unwrap().abs() < 1e-12);

    let out = run(&["eval", spec("hyperplane.json").to_str().unwrap(), "--point", "9,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_surfaces_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(
        &dir,
        "flat.json",
        r#"{"name":"collapsed","components":["s","s","u","t*0"],"variables":["s","t","u"],
            "domain":{"s":[0,1],"t":[0,1],"u":[0,1]}}"#,
    );
    let out = check(&p, &[]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["eval", p.to_str().unwrap(), "--point", "0.5,0.5,0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("det g"));
}

#[test]
fn csv_rows_match_evaluated_points() {
    // polar chart of a hyperplane, singular along s = 0
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(
        &dir,
        "polar.json",
        r#"{"name":"polar","components":["s*cos(t)","s*sin(t)","u","0"],"variables":["s","t","u"],
            "domain":{"s":[0,1],"t":[0,1],"u":[1,2]},"grid":{"s":3,"t":3,"u":3}}"#,
    );
    let out = check(&p, &["--format", "csv"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("9 point(s) skipped") && err.contains("[0.0, 0.0, 1.0]"), "{err}");
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rdr.records().count(), 27 - 9);
}

#[test]
fn flags_are_reproducible_from_points() {
    let r = json(&check(&spec("generic_hypercylinder.json"), &["--full"]));
    let tol = r["engine"]["tolerances"]["gcr"].as_f64().unwrap();
    let all_below = r["per_point"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["degenerate"] == false)
        .all(|p| p["gcr"]["primary"].as_f64().unwrap() < tol);
    assert_eq!(r["flags"]["is_gcr"].as_bool().unwrap(), all_below);
    assert!(!all_below);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let s = spec("so2_x_so2.json");
    assert!(check(&s, &["--full", "--out", a.to_str().unwrap()]).status.success());
    let out = bin()
        .env("GCRKIT_THREADS", "3")
        .args(["check", s.to_str().unwrap(), "--full", "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // only the two reports remain; no temporary files
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = bin()
        .env("GCRKIT_THREADS", "many")
        .args(["check", spec("hyperplane.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn random_sampling_is_seeded() {
    let s = spec("special_sqrt2.json");
    let a = check(&s, &["--random", "7", "--seed", "11", "--full"]);
    let b = check(&s, &["--random", "7", "--seed", "11", "--full"]);
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["engine"]["seed"], 11);
    assert_eq!(r["per_point"].as_array().unwrap().len(), 7);
    let c = check(&s, &["--random", "7", "--seed", "12", "--full"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn grid_override() {
    let r = json(&check(&spec("hyperplane.json"), &["--grid", "2,3,4", "--full"]));
    assert_eq!(r["per_point"].as_array().unwrap().len(), 24);
    assert_eq!(check(&spec("hyperplane.json"), &["--grid", "1"]).status.code(), Some(2));
    assert_eq!(check(&spec("hyperplane.json"), &["--grid", "2,2"]).status.code(), Some(2));
}

#[test]
fn ode_profile_spec_runs() {
    let r = json(&check(&spec("rotational_ode.json"), &[]));
    assert_eq!(r["surface"]["interpolated_profile"], true);
    assert_eq!(r["flags"]["is_gcr"], true);
    assert_eq!(r["engine"]["tolerances"]["structural"].as_f64(), Some(1e-3));
}
