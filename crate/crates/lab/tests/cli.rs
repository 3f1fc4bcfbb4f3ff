use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dklab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dklab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DKLAB_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn error_record(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is one JSON record")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_CONTRACTION: &str = r#"
base_seed = 99
[domain]
N = 16
[boundary]
rho_b_left = 1.0
rho_b_right = 1.0
[solver]
t_end = 0.1
save_count = 6
[ensemble]
paths = 4
parallelism = 2
[[initial.profiles]]
kind = "sine"
offset = 1.0
amplitude = 0.5
[[initial.profiles]]
kind = "constant"
value = 1.0
"#;

#[test]
fn missing_key_exits_2_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[domain]\na = 0.0\n");
    let out = dklab(&["run-contraction", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["key"], "domain.N");
    assert_eq!(rec["exit_code"], 2);
}

#[test]
fn unknown_key_and_conflicting_experiment_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", "[domain]\nN = 8\nwidth = 3\n");
    assert_eq!(
        dklab(&["verify-weight", &cfg], dir.path()).status.code(),
        Some(2)
    );
    let cfg = write(
        dir.path(),
        "b.toml",
        "experiment = \"heat_oracle\"\n[domain]\nN = 8\n",
    );
    let out = dklab(&["verify-weight", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["key"], "experiment");
}

#[test]
fn overflow_exits_3_with_blow_up_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"
        [domain]
        N = 4
        [nonlinear]
        regime = "porous_medium"
        m = 2.0
        [noise]
        enabled = false
        [solver]
        t_end = 1.0
        save_times = [1.0]
        [[initial.profiles]]
        kind = "values"
        values = [1e300, 1e300, 1e300, 1e300]
        [[initial.profiles]]
        kind = "constant"
        value = 0.0
        [ensemble]
        paths = 2
        "#,
    );
    let out = dklab(
        &["run-contraction", &cfg, "--output-dir", "out"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "blow_up");
    assert_eq!(rec["step"], 0);
}

#[test]
fn failed_assumption_exits_4_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    // Φ = ξ cannot dominate |ξ₁ − ξ₂|² for large differences
    let cfg = write(
        dir.path(),
        "d.toml",
        r#"
        [domain]
        N = 8
        [nonlinear]
        regime = "custom"
        phi = "xi"
        sigma = "xi"
        q0 = 1.0
        c_q0 = 1.0
        "#,
    );
    let out = dklab(
        &["check-assumptions", &cfg, "--output-dir", "out"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    let csv = std::fs::read_to_string(dir.path().join("out/assumptions.csv")).unwrap();
    assert!(csv
        .lines()
        .any(|l| l.starts_with("gap_lower_bound,") && l.contains(",false,")));
}

#[test]
fn contraction_run_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL_CONTRACTION);
    let out = dklab(
        &["run-contraction", &cfg, "--output-dir", "run"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = dir.path().join("run");
    for f in [
        "contraction_paths.csv",
        "contraction_curve.csv",
        "contraction_summary.csv",
        "manifest.toml",
    ] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let manifest = run.join("manifest.toml");
    let out = dklab(&["replay", manifest.to_str().unwrap()], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // nothing escapes the output directory
    let mut top: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["c.toml", "run"]);

    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("base_seed = 99", "base_seed = 100")).unwrap();
    let out = dklab(&["replay", manifest.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(5));
    let rec = error_record(&out);
    assert_eq!(rec["file"], "contraction_paths.csv");
    assert!(rec["row"].as_u64().unwrap() >= 2);
}

#[test]
fn replay_of_missing_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dklab(&["replay", "absent/manifest.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_and_env_default_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.toml", "[domain]\nN = 8\n");
    let out = Command::new(env!("CARGO_BIN_EXE_dklab"))
        .args(["verify-weight", &cfg, "--seed", "5"])
        .current_dir(dir.path())
        .env("DKLAB_OUTPUT_DIR", dir.path().join("envdir"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("envdir/manifest.toml")).unwrap();
    assert!(manifest.contains("base_seed = 5"));
    let csv = std::fs::read_to_string(dir.path().join("envdir/weight.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("cell,x,w,dw,lapw,slack1,slack2,slack3")
    );
    assert_eq!(csv.lines().count(), 9);
}
