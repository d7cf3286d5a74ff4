use std::fs;
use std::path::Path;
use std::process::Command;

use bogolab::harness::{parse_config_str, run_pipeline, run_pipeline_in, run_sweep};

const SMALL: &str = r#"
particles = 3
[grid]
length = 6.283185307179586
points = 6
[interaction]
beta = 0.0
[interaction.profile]
kind = "gaussian"
strength = 1.0
sigma = 0.8
[condensate]
kind = "gaussian"
center = 3.141592653589793
width = 1.0
momentum = 1.0
[excitations]
kind = "squeezed"
modes = [{ index = 1, strength = 0.1 }]
[time]
t_final = 0.2
dt = 1e-2
stride = 5
[output]
snapshots = true
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bogolab"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn compare_writes_all_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    for out in ["a", "b"] {
        let status = bin().args(["compare", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join(out)).status().unwrap();
        assert!(status.success());
    }
    for f in ["config.toml", "hartree.csv", "pair.csv", "fock.csv", "exact.csv", "compare.csv", "norm_error.dat", "summary.json", "snapshots/phi_00000.bin"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between identical runs");
    }
    assert!(tmp.path().join("a/timing.json").exists());
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    let hash = summary["config_hash"].as_str().unwrap().to_string();
    let compare = fs::read_to_string(tmp.path().join("a/compare.csv")).unwrap();
    assert!(compare.lines().skip(1).all(|l| l.starts_with(&hash)));
    assert_eq!(compare.lines().count(), 1 + 5);
}

#[test]
fn overrides_and_single_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("pair");
    let ok = bin()
        .args(["pair", "--quiet", "--dt", "5e-3", "--tfinal", "0.1", "--seed", "7", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(ok.success());
    assert!(out.join("hartree.csv").exists() && out.join("pair.csv").exists());
    assert!(!out.join("exact.csv").exists());
    let echoed = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("seed = 7") && echoed.contains("t_final = 0.1") && echoed.contains("dt = 0.005"));
    for stage in ["hartree", "fock", "exact"] {
        let dir = tmp.path().join(stage);
        assert!(bin().args([stage, "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&dir).status().unwrap().success());
        assert!(dir.join(format!("{stage}.csv")).exists());
    }
}

#[test]
fn bad_config_is_rejected_with_key_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("beta = 0.0", "betta = 0.0"));
    let out = bin().args(["compare", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("betta"));
}

#[test]
fn sweep_then_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("particles = 3", "particles_list = [2, 3, 4]");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("sweep");
    assert!(bin().args(["sweep", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    let fit = bin().args(["fit", "--input"]).arg(out.join("summary.csv")).output().unwrap();
    assert!(fit.status.success());
    let text = String::from_utf8(fit.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "3");
    assert!(row[2].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn in_memory_runs_are_bitwise_reproducible() {
    let cfg = parse_config_str(SMALL).unwrap();
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(a.rows, b.rows);
}

#[test]
fn failing_member_does_not_disturb_others() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("particles = 3", "particles_list = [2, 6]")
        .replace("[output]", "[truncation]\nmemory_cap = 300\n[output]");
    let cfg = parse_config_str(&text).unwrap();
    let res = run_sweep(&cfg, Some(tmp.path())).unwrap();
    assert_eq!(res.records.len(), 1);
    let failed: Vec<_> = res.rows.iter().filter(|r| r.status != "ok").collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].particles, 6);
    assert!(failed[0].status.contains("300"));
    let good: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("N0002_beta0.0000/summary.json")).unwrap()).unwrap();
    assert_eq!(good["status"], "ok");
    let bad: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("N0006_beta0.0000/summary.json")).unwrap()).unwrap();
    assert!(bad["status"].as_str().unwrap().starts_with("failed during exact"));
    assert!(tmp.path().join("N0006_beta0.0000/fock.csv").exists());
    assert!(!tmp.path().join("N0006_beta0.0000/compare.csv").exists());
}

#[test]
fn leakage_abort_flushes_earlier_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[output]", "[tolerances]\nleakage = 1e-14\n[output]");
    let cfg = parse_config_str(&text).unwrap();
    let err = run_pipeline_in(&cfg, tmp.path()).unwrap_err();
    assert!(matches!(err, bogolab::Error::Leakage { .. }), "{err}");
    assert!(tmp.path().join("pair.csv").exists());
    let s: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert!(s["status"].as_str().unwrap().starts_with("failed during fock"));
}

#[test]
fn free_condensate_pipeline_is_exact() {
    let text = r#"
particles = 3
[grid]
length = 6.283185307179586
points = 8
[interaction]
beta = 0.0
[interaction.profile]
kind = "zero"
[condensate]
kind = "plane_wave"
index = 1
[time]
t_final = 0.5
dt = 1e-2
"#;
    let rec = run_pipeline(&parse_config_str(text).unwrap()).unwrap();
    assert!(rec.max_norm_error() < 1e-10);
    assert!(rec.rows.iter().all(|r| r.report.depletion.abs() < 1e-10 && r.report.excitation_number.abs() < 1e-10));
}
