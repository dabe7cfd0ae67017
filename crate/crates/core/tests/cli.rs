use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn uj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uj")).args(args).output().expect("spawn uj")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn chsh_of_singlet_fixture() {
    let (state, settings) = (fixture("singlet.json"), fixture("optimal_settings.json"));
    let v = json(&uj(&["chsh", "--state", path(&state), "--settings", path(&settings)]));
    assert_eq!(v["schema"], "uj/1");
    assert!((v["value"].as_f64().unwrap() - 2.828427).abs() < 1e-6);
    assert!(v["terms"]["t11"].is_number());

    let v = json(&uj(&["chsh", "--lambda", "0.5"]));
    assert!((v["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn box_chsh_of_pr_box_is_exactly_four() {
    let pr = fixture("pr_box.json");
    let v = json(&uj(&["box-chsh", "--box", path(&pr)]));
    assert_eq!(v["report"]["value"].as_f64(), Some(4.0));
    assert_eq!(v["report"]["exact"], "4");
    assert_eq!(v["signaling_residual"].as_f64(), Some(0.0));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let (z, x) = (fixture("z.json"), fixture("x.json"));
    for out in [&a, &b] {
        let o = uj(&["--out", path(out), "jointly-measurable", "--o1", path(&z), "--o2", path(&x), "--lambda", "0.7"]);
        assert!(o.status.success());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(v["schema"], "uj/1");
    assert_eq!(v["feasible"], "yes");
}

#[test]
fn exit_codes() {
    let (z, x) = (fixture("z.json"), fixture("x.json"));
    let base = ["jointly-measurable", "--o1", path(&z), "--o2", path(&x), "--expect-feasible", "--lambda"];

    let ok = uj(&[&base[..], &["0.7"]].concat());
    assert_eq!(ok.status.code(), Some(0));

    let infeasible = uj(&[&base[..], &["0.8"]].concat());
    assert_eq!(infeasible.status.code(), Some(2));
    assert_eq!(json_lenient(&infeasible)["feasible"], "no");

    let bad_lambda = uj(&[&base[..], &["1.5"]].concat());
    assert_eq!(bad_lambda.status.code(), Some(1));

    let missing = uj(&["dilate", "--obs", "/nonexistent/obs.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}

fn json_lenient(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"dim\": 2,\n  \"re\": [[1, 0], [0, 0]\n}\n").unwrap();
    let out = uj(&["dilate", "--obs", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn sweep_csv_format() {
    let (z, x) = (fixture("z.json"), fixture("x.json"));
    let out = uj(&["sweep", "--o1", path(&z), "--o2", path(&x)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,feasible,smeared_chsh,bound"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for row in &rows {
        assert_eq!(row.len(), 4);
        let lam: f64 = row[0].parse().unwrap();
        let expected = if lam <= std::f64::consts::FRAC_1_SQRT_2 { "yes" } else { "no" };
        assert_eq!(row[1], expected, "lambda {lam}");
        let s: f64 = row[2].parse().unwrap();
        assert!((s - lam * 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn lambda_opt_modes() {
    let v = json(&uj(&["lambda-opt", "--mesh", "200"]));
    assert!((v["lambda_opt"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    assert_eq!(v["search"]["oracle_verdict"], "yes");

    let (z, x) = (fixture("z.json"), fixture("x.json"));
    let v = json(&uj(&["lambda-opt", "--mode", "pair", "--o1", path(&z), "--o2", path(&x)]));
    assert!((v["lambda_opt"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);

    let bad = uj(&["lambda-opt", "--tol", "0.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn dilation_and_blocks_reports() {
    let (z, x) = (fixture("z.json"), fixture("x.json"));
    let v = json(&uj(&["dilate", "--obs", path(&x)]));
    assert_eq!(v["schema"], "uj/1");
    let v = json(&uj(&["blocks", "--p", path(&z), "--q", path(&x)]));
    assert_eq!(v["schema"], "uj/1");
    let v = json(&uj(&["smear", "--obs", path(&z), "--lambda", "0.5"]));
    assert_eq!(v["schema"], "uj/1");
}
