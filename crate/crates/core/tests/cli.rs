use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pointerlab"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(file: &Path, experiment: &str, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(file)
        .args(["--experiment", experiment, "--out"])
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn scalar(report: &Value, name: &str) -> f64 {
    report["scalars"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == name)
        .unwrap_or_else(|| panic!("no scalar {name}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn spin_weak_value_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &scenario("spin-anomalous.toml"),
        "spin-weak-value",
        dir.path(),
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert!((scalar(&r, "arrival") - 0.0062).abs() < 5e-5);
    assert!((scalar(&r, "shift") + 12.7062).abs() < 1e-3);
    assert!((scalar(&r, "acceptance reaches one at") + 2009.5).abs() < 0.1);
    assert!(r["scenario_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
    for s in r["scalars"].as_array().unwrap() {
        assert!(!s["definition"].as_str().unwrap().is_empty(), "{s}");
    }
    for f in [
        "reading-densities.csv",
        "reshaping-filter.csv",
        "report.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn fig1_centroid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &scenario("fig1-collapse.toml"),
        "fig1-collapse",
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert!((scalar(&r, "mixture centroid") - 4.0).abs() < 0.2);
    let csv = fs::read_to_string(dir.path().join("collapse-curves.csv")).unwrap();
    assert!(csv.starts_with("x,mixture,collapsed,modulus_sq,collapsed_modulus_sq\n"));
}

#[test]
fn outputs_are_byte_identical_for_a_fixed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = run(
            &scenario("quantum-qutrit.toml"),
            "montecarlo-validate",
            dir,
            &["--trials", "5000", "--seed", "11"],
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in ["samples.csv", "x1-histogram.csv", "report.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    run(
        &scenario("quantum-qutrit.toml"),
        "montecarlo-validate",
        c.path(),
        &["--trials", "5000", "--seed", "12"],
    );
    assert_ne!(
        fs::read(a.path().join("samples.csv")).unwrap(),
        fs::read(c.path().join("samples.csv")).unwrap()
    );
}

#[test]
fn failed_check_exits_with_one() {
    // a narrow first pointer is outside the broad-pointer regime the
    // reshaping filter relies on
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("quantum-qutrit.toml"))
        .unwrap()
        .replacen("width = 10.0", "width = 1.0", 1);
    let file = dir.path().join("narrow.toml");
    fs::write(&file, text).unwrap();
    let out = run(
        &file,
        "reshaping-demo",
        &dir.path().join("out"),
        &["--trials", "200000"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
    assert_eq!(report(&dir.path().join("out"))["passed"], false);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &scenario("fig1-collapse.toml"),
        "no-such-experiment",
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        &scenario("fig1-collapse.toml"),
        "spin-weak-value",
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind"));
    let out = bin()
        .args(["validate", "/nonexistent/file.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin()
        .arg("validate")
        .arg(scenario("classical-three-node.toml"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["passed"], true);

    let text = fs::read_to_string(scenario("classical-three-node.toml"))
        .unwrap()
        .replace("[0.1, 0.6, 0.3]", "[0.1, 0.6, 0.2]");
    let file = dir.path().join("column.toml");
    fs::write(&file, text).unwrap();
    let out = bin().arg("validate").arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("classical.branching[*][2]") && err.contains("0.9"),
        "{err}"
    );

    let file = dir.path().join("unitary.toml");
    fs::write(
        &file,
        r#"
kind = "quantum"
[quantum]
initial = [[1.0, 0.0], [0.0, 0.0]]
basis_b = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
b_values = [1.0, -1.0]
basis_f = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
f_values = [1.0, -1.0]
evolution_1 = [[[1.0, 0.0], [0.1, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
"#,
    )
    .unwrap();
    let out = bin().arg("validate").arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("quantum.evolution_1") && err.contains("1.000e-1"),
        "{err}"
    );

    let file = dir.path().join("typo.toml");
    fs::write(&file, "kind = \"spin\"\nsed = 3\n").unwrap();
    let out = bin().arg("validate").arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_example_scenario_validates() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
    }
}
