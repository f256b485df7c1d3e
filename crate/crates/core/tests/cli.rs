use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fchlab::io::{read_manifest, verify_manifest};

fn fchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fchlab")).args(args).output().unwrap()
}

fn fchlab_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fchlab"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_version_and_usage_errors() {
    assert_eq!(code(&fchlab(&["--help"])), 0);
    assert_eq!(code(&fchlab(&["--version"])), 0);
    let unknown = fchlab(&["frobnicate"]);
    assert_eq!(code(&unknown), 1);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("frobnicate"));
    assert_eq!(code(&fchlab(&["lifespan", "--nu", "1.4"])), 1);
    assert_eq!(code(&fchlab(&["lifespan", "--u0", "cosine:0.05,1", "--nu", "0.5", "--c-hat", "1"])), 1);
    assert_eq!(code(&fchlab(&["lifespan", "--u0", "wave:1", "--nu", "1.4", "--c-hat", "1"])), 1);
}

#[test]
fn lifespan_prints_the_estimate() {
    let o = fchlab(&["lifespan", "--u0", "cosine:0.05,1", "--nu", "1.4", "--c-hat", "2", "--n", "64"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let rows: Vec<(&str, f64)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k, v.parse().unwrap())
        })
        .collect();
    assert_eq!(out.lines().next(), Some("quantity,value"));
    let get = |k: &str| rows.iter().find(|r| r.0 == k).unwrap().1;
    assert_eq!(get("s0"), 2.5);
    let norm = 0.05 * 2f64.powf(-2.5) * std::f64::consts::PI.sqrt();
    assert!((get("u0_norm") - norm).abs() < 1e-12 * norm);
    assert_eq!(get("T"), (1.0f64 / 2.0).min(1.0 / (16.0 * get("u0_norm"))));
}

#[test]
fn simulate_besov_and_analyticity_share_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = fchlab(&[
        "simulate", "--nu", "1.4", "--n", "64", "--dt", "0.01", "--t-end", "0.05", "--u0", "sech:0.2,0.5",
        "--monitor-stride", "1", "--out-dir", p(&run),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(verify_manifest(&run).unwrap().is_empty());
    let manifest = read_manifest(&run).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert!(manifest.outputs.iter().any(|e| e.path == "norms.csv"));
    assert_eq!(manifest.outputs.iter().filter(|e| e.path.starts_with("snap_")).count(), 6);

    let b = fchlab(&["besov", "--in", p(&run.join("snap_00000.bin")), "--s", "2.5"]);
    assert_eq!(code(&b), 0);
    let out = stdout(&b);
    let mut lines = out.lines();
    let norm: f64 = lines.next().unwrap().strip_prefix("norm,").unwrap().parse().unwrap();
    assert_eq!(lines.next(), Some("q,block_l2,block_linf,weighted"));
    let weighted: f64 = lines.map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((weighted - norm).abs() < 1e-12 * norm);
    assert_eq!(code(&fchlab(&["besov", "--in", p(&run.join("none.bin")), "--s", "1"])), 1);

    let a = fchlab(&["analyticity", "--run-dir", p(&run)]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let manifest = read_manifest(&run).unwrap();
    assert!(manifest.outputs.iter().any(|e| e.path == "es.csv"));
    assert!(manifest.outputs.iter().any(|e| e.path == "decay.csv"));
    assert!(verify_manifest(&run).unwrap().is_empty());
}

#[test]
fn blow_up_exits_with_the_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("boom");
    let o = fchlab(&[
        "simulate", "--nu", "1.4", "--n", "64", "--t-end", "0.5", "--u0", "cosine:3,1", "--blowup-threshold", "5",
        "--out-dir", p(&run),
    ]);
    assert_eq!(code(&o), 2);
    assert!(run.join("blowup.json").exists() && run.join("blowup_last.bin").exists());
    assert!(verify_manifest(&run).unwrap().is_empty());
}

#[test]
fn picard_and_checks_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("picard");
    let o = fchlab(&[
        "picard", "--nu", "1.4", "--n", "32", "--c-hat", "3", "--n-max", "6", "--u0", "cosine:0.05,1",
        "--time-steps", "20", "--out-dir", p(&run),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["diffs.csv", "summary.json", "iterate_06.bin"] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert!(verify_manifest(&run).unwrap().is_empty());

    let bony = fchlab(&["bony-check", "--n", "64", "--ensemble", "4"]);
    assert_eq!(code(&bony), 0);
    let audit_dir = dir.path().join("audit");
    let audit = fchlab(&["commutator-audit", "--nu", "1.4", "--grid-n", "64", "--ensemble", "4", "--out-dir", p(&audit_dir)]);
    assert_eq!(code(&audit), 0);
    assert!(verify_manifest(&audit_dir).unwrap().is_empty());
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("sweep.cfg");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "command = simulate\nn = 32\nt_end = 0.02\ndt = 0.01\nnu = 1.2\nnu = 1.6\namp = 0.05\namp = 0.1\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&fchlab_env(&["sweep", "--config", &cfg, "--out-dir", p(&a)], "FCHLAB_THREADS", "1")), 0);
    assert_eq!(code(&fchlab(&["sweep", "--config", &cfg, "--out-dir", p(&b)])), 0);
    let sa = fs::read_to_string(a.join("summary.csv")).unwrap();
    let sb = fs::read_to_string(b.join("summary.csv")).unwrap();
    assert_eq!(sa, sb);
    let lines: Vec<&str> = sa.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("cell,nu,amp,status,exit_code,message"));
    assert!(lines[1..].iter().all(|l| l.contains(",ok,0,")));
    for i in 0..4 {
        assert!(read_manifest(&a.join(format!("cell_{i:04}"))).is_ok());
    }
    assert!(verify_manifest(&a).unwrap().is_empty());

    let bad = fchlab_env(&["sweep", "--config", &cfg, "--out-dir", p(&dir.path().join("c"))], "FCHLAB_THREADS", "x");
    assert_eq!(code(&bad), 1);
    assert!(!dir.path().join("c").exists());
}

#[test]
fn empty_and_failing_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "command = lifespan\nu0 = cosine:0.05,1\nc_hat = 1\nnu =\n");
    let out = dir.path().join("empty");
    assert_eq!(code(&fchlab(&["sweep", "--config", &cfg, "--out-dir", p(&out)])), 0);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);

    let cfg = write_config(dir.path(), "command = lifespan\nu0 = cosine:0.05,1\nc_hat = 1\nnu = 1.4\nnu = 0.5\n");
    let out = dir.path().join("mixed");
    assert_eq!(code(&fchlab(&["sweep", "--config", &cfg, "--out-dir", p(&out)])), 0);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert!(rows[0].contains(",ok,0,"));
    assert!(rows[1].contains(",invalid,1,"));

    let cfg = write_config(dir.path(), "nu = 1.4\n");
    assert_eq!(code(&fchlab(&["sweep", "--config", &cfg, "--out-dir", p(&dir.path().join("x"))])), 1);
}
