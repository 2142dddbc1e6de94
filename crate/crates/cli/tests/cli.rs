use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_kind(kind: &str, cfg: &Path, out: &Path) -> Output {
    hwlab(&[kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / hi.abs()
}

const SMALL: &str = "grid.nx = 16\ngrid.ny = 1024\n";

#[test]
fn simulate_conserves_mass_and_linear_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.txt", SMALL);
    let out = run_kind("simulate", &cfg, &tmp.path().join("a"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("a/simulate.csv")).unwrap();
    assert!(spread(&column(&csv, "mass")) < 1e-12);

    let cfg = write_config(tmp.path(), "b.txt", &format!("{SMALL}physics.mu = 0.0\n"));
    assert!(run_kind("simulate", &cfg, &tmp.path().join("b")).status.success());
    let csv = std::fs::read_to_string(tmp.path().join("b/simulate.csv")).unwrap();
    assert!(spread(&column(&csv, "energy")) < 1e-12);
}

#[test]
fn energy_drift_is_second_order() {
    let tmp = tempfile::tempdir().unwrap();
    let mut drift = Vec::new();
    for (i, dt) in ["0.00390625", "0.001953125"].iter().enumerate() {
        let cfg = write_config(
            tmp.path(),
            &format!("c{i}.txt"),
            &format!("{SMALL}time.t0 = 0.125\ntime.dt = {dt}\ndata.amp = 1.0\n"),
        );
        let dir = tmp.path().join(format!("e{i}"));
        assert!(run_kind("simulate", &cfg, &dir).status.success());
        let j: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("conservation.json")).unwrap()).unwrap();
        drift.push(j["energy_drift"].as_f64().unwrap());
    }
    let r = drift[0] / drift[1];
    assert!((r - 4.0).abs() < 0.8, "{drift:?}");
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.txt", &format!("{SMALL}randstats.samples = 2000\n"));
    for kind in ["simulate", "randstats", "norms"] {
        let first = tmp.path().join(format!("{kind}1"));
        assert!(run_kind(kind, &cfg, &first).status.success());
        let second = tmp.path().join(format!("{kind}2"));
        let out = run_kind(kind, &first.join("run_manifest.json"), &second);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(first.join("run_manifest.json")).unwrap()).unwrap();
        let outputs = m["outputs"].as_object().unwrap();
        assert!(!outputs.is_empty());
        for name in outputs.keys() {
            let a = std::fs::read(first.join(name)).unwrap();
            let b = std::fs::read(second.join(name)).unwrap();
            assert!(a == b, "{kind}/{name} differs");
        }
    }
}

#[test]
fn seed_flag_changes_random_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.txt", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run_kind("norms", &cfg, &a).status.success());
    let out = hwlab(&["norms", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success());
    let ta = std::fs::read_to_string(a.join("norms.csv")).unwrap();
    let tb = std::fs::read_to_string(b.join("norms.csv")).unwrap();
    assert_ne!(ta, tb);
    assert!(std::fs::read_to_string(b.join("config.txt")).unwrap().contains("random.seed = 7"));
}

#[test]
fn exponents_table_contains_reported_optimum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "x.txt", "");
    let dir = tmp.path().join("x");
    assert!(run_kind("exponents", &cfg, &dir).status.success());
    let csv = std::fs::read_to_string(dir.join("optimum.csv")).unwrap();
    let grid_row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    let reported = [0.732232, 0.464131, 0.154581, 0.077290, 0.577291];
    for (a, b) in grid_row.iter().zip(reported) {
        assert!((a - b).abs() < 2e-4, "{grid_row:?}");
    }
}

#[test]
fn randstats_khintchine_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "k.txt", "grid.nx = 8\ngrid.ny = 1024\n");
    let dir = tmp.path().join("k");
    assert!(run_kind("randstats", &cfg, &dir).status.success());
    let csv = std::fs::read_to_string(dir.join("khintchine.csv")).unwrap();
    let r = column(&csv, "ratio")[0];
    assert!((r - 2f64.powf(0.25)).abs() < 0.02, "{r}");
}

#[test]
fn ladder_without_levels_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "l.txt", "ansatz.nmax = 8\n");
    let dir = tmp.path().join("l");
    let out = run_kind("ladder", &cfg, &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("ladder.json")).unwrap()).unwrap();
    assert_eq!(j["levels"].as_array().unwrap().len(), 0);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.txt", "grid.nx = 16\n\ngrid.lx = wide\n");
    let out = run_kind("simulate", &bad, &tmp.path().join("bad"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt:3:"));

    let grid = write_config(tmp.path(), "grid.txt", "grid.ny = 1000\n");
    assert_eq!(run_kind("norms", &grid, &tmp.path().join("g")).status.code(), Some(1));

    let loud = write_config(tmp.path(), "loud.txt", "ansatz.nmax = 16\ndata.amp = 50.0\n");
    let dir = tmp.path().join("loud");
    assert_eq!(run_kind("ladder", &loud, &dir).status.code(), Some(2));
    assert!(dir.join("run_manifest.json").exists());
}
