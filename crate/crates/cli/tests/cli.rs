use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharp-tails"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn bounds_at_zero_for_rademacher() {
    let o = run(&["bounds", "--model", "rademacher:100", "--x-grid", "0:0:1"]);
    assert!(o.status.success());
    let (h, rows) = csv_rows(&stdout(&o));
    let r = &rows[0];
    for name in ["hoeffding", "bennett", "bernstein", "inf_mgf"] {
        assert_eq!(r[col(&h, name)].parse::<f64>().unwrap(), 1.0, "{name}");
    }
    for name in ["mills", "theorem21_center", "theorem31_center", "theorem23_center"] {
        assert_eq!(r[col(&h, name)].parse::<f64>().unwrap(), 0.5, "{name}");
    }
}

#[test]
fn bounds_from_model_file_and_eta_equality() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "eta.json",
        r#"{"components": [{"atoms": [[1, 0.2], [-0.25, 0.8]], "multiplicity": 40}]}"#,
    );
    let o = run(&["bounds", "--model", &model, "--x-grid", "0:6:13", "--bounds", "classical"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 13);
    for r in rows {
        let hn: f64 = r[col(&h, "hoeffding")].parse().unwrap();
        let inf: f64 = r[col(&h, "inf_mgf")].parse().unwrap();
        let be: f64 = r[col(&h, "bennett")].parse().unwrap();
        assert!((hn - inf).abs() <= 1e-10 * hn);
        assert!(hn <= be);
    }
}

#[test]
fn csv_output_is_byte_stable_and_meta_goes_to_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let meta = dir.path().join("meta.json");
    for (out, with_meta) in [(&a, true), (&b, false)] {
        let mut args = vec![
            "bounds",
            "--model",
            "rademacher:64",
            "--x-grid",
            "0:3:7",
            "--output",
            out.to_str().unwrap(),
        ];
        if with_meta {
            args.extend(["--meta", meta.to_str().unwrap()]);
        }
        assert!(run(&args).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let m: Value = serde_json::from_str(&fs::read_to_string(&meta).unwrap()).unwrap();
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "bounds");
}

#[test]
fn json_carries_schema_version() {
    let o = run(&["bounds", "--model", "rademacher:16", "--x-grid", "0:1:2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][0]["theorem23"]["kind"], "theorem23");
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let off_centre = write(
        dir.path(),
        "bad.json",
        r#"{"components": [{"atoms": [[1, 0.5], [-0.5, 0.5]], "multiplicity": 3}]}"#,
    );
    let o = run(&["bounds", "--model", &off_centre, "--x-grid", "0:1:2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("components[0].atoms") && err.contains("mean"), "{err}");
    assert!(o.stdout.is_empty());

    let broken = write(dir.path(), "broken.json", "{\"components\": [");
    assert_eq!(run(&["rate", "--model", &broken, "--y-grid", "0:1:2"]).status.code(), Some(2));
    assert_eq!(
        run(&["bounds", "--model", "rademacher:10", "--x-grid", "0:1"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["bounds", "--model", "rademacher:10"]).status.code(), Some(2));
}

#[test]
fn hypothesis_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let wide = write(
        dir.path(),
        "wide.json",
        r#"{"components": [{"atoms": [[2, 0.2], [-0.5, 0.8]], "multiplicity": 30}]}"#,
    );
    let o = run(&["bounds", "--model", &wide, "--x-grid", "0:1:2", "--bounds", "theorem23"]);
    assert_eq!(o.status.code(), Some(3));
    // without an explicit request the row is reported with the reason instead
    let o = run(&["bounds", "--model", &wide, "--x-grid", "0:1:2", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rows"][0]["theorem23"]["error"].as_str().unwrap().contains("hypothesis"));
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = run(&["verify", "--model", "rademacher:100"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["passed"], true);
    for l in v["report"]["lemmas"]["lemmas"].as_array().unwrap() {
        assert_ne!(l["status"], "violated", "{l}");
    }

    let dir = tempfile::tempdir().unwrap();
    let wide = write(
        dir.path(),
        "wide.json",
        r#"{"components": [{"atoms": [[2, 0.2], [-0.5, 0.8]], "multiplicity": 30}]}"#,
    );
    let v: Value = serde_json::from_str(&stdout(&run(&["verify", "--model", &wide]))).unwrap();
    let rows = v["report"]["containment"].as_array().unwrap();
    for name in ["theorem21", "theorem23"] {
        let r = rows.iter().find(|r| r["name"] == name).unwrap();
        assert_eq!(r["status"], "skipped");
        assert!(r["reason"].as_str().unwrap().starts_with("hypothesis"));
    }

    // an absurdly small Berry-Esseen constant makes the sharp intervals too narrow
    let o = run(&["verify", "--model", "rademacher:100", "--c3", "0.001"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn figure1_rows() {
    let o = run(&["figure1", "--n", "100", "--x-max", "1", "--points", "3"]);
    assert!(o.status.success());
    let (h, rows) = csv_rows(&stdout(&o));
    assert_eq!(h, ["n", "x", "exact_tail", "theta_h", "ratio", "strict"]);
    let tail0: f64 = rows[0][2].parse().unwrap();
    assert!((tail0 - 0.539_794_618_693_589_5).abs() < 1e-12);
    assert_eq!(rows[0][5], "false");
}

#[test]
fn rate_flags_unreachable_rows() {
    let o = run(&["rate", "--model", "rademacher:10", "--y-grid", "0:1:3"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    let y: f64 = 0.5;
    let closed = 0.5 * (1.0 + y) * (1.0 + y).ln() + 0.5 * (1.0 - y) * (1.0 - y).ln();
    assert!((rows[1][1].parse::<f64>().unwrap() - closed).abs() < 1e-12);
    assert!(rows[2][1].is_empty() && rows[2][4].contains("no saddlepoint"));
}

#[test]
fn mc_is_reproducible_and_honest_about_zero_hits() {
    let args = [
        "mc", "--model", "rademacher:400", "--x", "3", "--samples", "20000", "--seed", "5",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["method"], "tilted_mc");
    assert!(v["lambda_bar"].as_f64().unwrap() > 0.0);
    assert!(v["relative_stderr"].as_f64().unwrap() < 0.05);

    let o = run(&[
        "mc", "--model", "rademacher:400", "--x", "4", "--samples", "10000", "--seed", "1", "--method", "mc",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["hits"], 0);
    assert_eq!(v["p"], 0.0);
    assert!(v["note"].as_str().unwrap().contains("upper bound"));

    let o = run(&["mc", "--model", "rademacher:10", "--x", "10", "--method", "tilted"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no saddlepoint"));
}
