use std::path::Path;
use std::process::{Command, Output};

fn gbbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbbm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn homogeneous_eigen_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[field]\ndim = 1\noffset = 1.0\n[eigen]\nlambda = [0.0, 1.0, 2.0]\n");
    let out = gbbm(&["eigen", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3);
    for (l, g) in rows {
        assert!((g - 1.0 - 0.5 * l * l).abs() < 1e-10);
    }
}

#[test]
fn unknown_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sim]\ndt = 0.01\nsteps = 3\n");
    let out = gbbm(&["speed", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn negative_field_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[field]\ndim = 1\noffset = 0.2\nmodes = [{ k = [1], amp = 0.5 }]\n");
    assert_eq!(gbbm(&["speed", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = gbbm(&["speed", "--dump", "--seed", "42"]);
    assert!(out.status.success());
    let dumped = String::from_utf8(out.stdout).unwrap();
    assert!(dumped.contains("seed = 42"));
    let cfg = write_config(dir.path(), &dumped);
    let again = gbbm(&["speed", "--dump", "--config", &cfg]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), dumped);
}

#[test]
fn simulate_writes_manifest_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 9\n[simulate]\ntimes = [1.0, 2.0]\nreps = 4\n");
    let mut csvs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "2")] {
        let out_dir = dir.path().join(name);
        let out = gbbm(&["simulate", "--config", &cfg, "--threads", threads, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read_to_string(out_dir.join("simulate.csv")).unwrap());
        let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], 9);
        assert_eq!(manifest["command"], "simulate");
        assert_eq!(manifest["field_sha256"].as_str().unwrap().len(), 64);
        assert_eq!(manifest["outputs"][0], "simulate.csv");
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0].lines().count(), 1 + 4 * 2);
}

#[test]
fn speed_profile_of_planar_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[field]\ndim = 2\noffset = 2.0\n[speed]\ndirections = 32\n");
    let out = gbbm(&["speed", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 33);
    for line in text.lines().skip(1) {
        let c: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((c - 2.0).abs() < 1e-8, "{line}");
    }
}
