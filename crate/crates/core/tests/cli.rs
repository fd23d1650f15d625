//! End-to-end runs of the binary.

use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_pulsetrack");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("PULSETRACK_THREADS")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

const SHORT: &str = "replicas = 2\nout = \"o\"\n[sim]\nsigma = 1e-3\nt_end = 0.5\ndt = 5e-3\nsave_every = 10\n";

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "ok.toml", SHORT);
    write(d, "q.toml", "[sim]\nq = 0.6\n");
    write(d, "neg.toml", "[sim]\nsigma = -1e-3\n");
    write(d, "key.toml", "[sim]\nsgima = 1e-3\n");
    assert_eq!(run(d, &["validate", "--config", "ok.toml"]).status.code(), Some(0));
    for bad in ["q.toml", "neg.toml", "key.toml", "missing.toml"] {
        let o = run(d, &["validate", "--config", bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(!o.stderr.is_empty());
    }
    // no experiment named anywhere
    assert_eq!(run(d, &["run", "--config", "ok.toml"]).status.code(), Some(2));
    assert_eq!(run(d, &["track", "--config", "ok.toml", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(run(d, &["bogus", "--config", "ok.toml"]).status.code(), Some(2));
}

#[test]
fn spectrum_has_zero_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "c.toml", "experiment = \"spectrum\"\nout = \"spec\"\n");
    let o = run(d, &["run", "--config", "c.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = d.join("spec/spectrum_summary.csv");
    let l0 = csv_column(&s, "lambda0_re")[0].hypot(csv_column(&s, "lambda0_im")[0]);
    assert!(l0 <= 1e-6, "{l0}");
    assert!(csv_column(&s, "dispersion_max_re")[0] < 0.0);
    let kinds = csv_column(&d.join("spec/eigenvalues.csv"), "re");
    assert!(kinds.len() >= 2);
}

#[test]
fn deterministic_track_keeps_phase() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "c.toml", "[sim]\nsigma = 0.0\nt_end = 2.0\ndt = 5e-3\nsave_every = 20\n");
    let o = run(d, &["track", "--config", "c.toml", "--out", "det"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = d.join("det/path_r0000.csv");
    let phi = csv_column(&p, "phi_m");
    assert_eq!(phi.len(), 21);
    assert!(phi.iter().all(|v| v.abs() <= 1e-12), "{phi:?}");
    assert!(csv_column(&p, "x_h").iter().all(|v| v.abs() <= 1e-10));
    assert!(!d.join("det/sode.csv").exists());
}

#[test]
fn rerun_is_byte_identical_and_manifest_complete() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        write(d, "c.toml", SHORT);
        let o = run(d, &["track", "--config", "c.toml", "--seed", "11", "--profile-cache", "p.csv"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // a second run in the same place uses the profile cache
    let o = run(b.path(), &["track", "--config", "c.toml", "--seed", "11", "--profile-cache", "p.csv", "--threads", "2"]);
    assert!(o.status.success());

    let out_a = a.path().join("o");
    let out_b = b.path().join("o");
    let mut names: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for n in &names {
        let x = std::fs::read(out_a.join(n)).unwrap();
        let y = std::fs::read(out_b.join(n)).unwrap();
        assert!(x == y, "{n} differs");
    }

    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_eq!(m["experiment"], "track");
    assert!(m["git_hash"].is_string());
    let files = m["files"].as_array().unwrap();
    let listed: Vec<&str> = files.iter().map(|f| f["file"].as_str().unwrap()).collect();
    for n in names.iter().filter(|n| *n != "manifest.json") {
        assert!(listed.contains(&n.as_str()), "{n} not in manifest");
    }
    for f in files {
        let name = f["file"].as_str().unwrap();
        let bytes = std::fs::read(out_a.join(name)).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        if name.ends_with(".csv") {
            let header = String::from_utf8_lossy(&bytes).lines().next().unwrap().to_string();
            let cols: Vec<&str> = f["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
            assert_eq!(cols.join(","), header);
            assert!(f["schema"].as_str().unwrap().ends_with(".v1"));
        }
    }
    for n in ["config.toml", "stopping.csv", "path_r0000.csv", "path_r0001.csv", "sode.csv", "sode_summary.csv"] {
        assert!(listed.contains(&n), "{n}");
    }
    // the echoed config reproduces the run settings
    let echo = std::fs::read_to_string(out_a.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 11"));
    assert!(echo.contains("experiment = \"track\""));

    // feeding the echo back reproduces every file
    let o = run(a.path(), &["run", "--config", "o/config.toml", "--profile-cache", "p.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for n in &names {
        let x = std::fs::read(out_a.join(n)).unwrap();
        let y = std::fs::read(out_b.join(n)).unwrap();
        assert!(x == y, "{n} differs after the echo run");
    }
}

#[test]
fn numerical_failure_writes_dump() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // noise of order one destroys the pulse
    write(d, "c.toml", "out = \"f\"\n[sim]\nsigma = 50.0\nt_end = 5.0\ndt = 5e-3\n");
    let o = run(d, &["track", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let dump: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("f/failure.json")).unwrap()).unwrap();
    assert_eq!(dump["exit_code"], 3);
    assert!(!d.join("f/manifest.json").exists());
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let o = run(&dir, &["validate", "--config", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            n += 1;
        }
    }
    assert!(n >= 8);
}
