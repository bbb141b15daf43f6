use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rkhs-transform"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn effective_example_reports_effective() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["effective", "--dim", "4", "--ranks", "1,1,1,1", "--schedule", "cyclic", "--seed", "7"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("effective: true"));
    assert_eq!(summary(dir.path())["pass"], true);
}

#[test]
fn effective_expectation_can_fail() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["effective", "--dim", "4", "--ranks", "1,1,1", "--expect", "true"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary(dir.path())["pass"], false);
}

#[test]
fn transform_tk_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["transform-tk", "--kernel", "brownian", "--measure", "density:[0,1]:n=1000:one"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let line = stdout.lines().find(|l| l.starts_with("norm^2 (measure side)")).unwrap();
    let v: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((v - 1.0 / 3.0).abs() < 5e-6);
    let csv = std::fs::read_to_string(dir.path().join("transform-tk.csv")).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "t,value,oracle");
    assert_eq!(body.len(), 1002);
}

#[test]
fn inf_fourier_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["inf-fourier", "--seed", "1", "--paths", "100000", "--s", "1", "--t", "2", "--functional", "exp"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("inf-fourier.csv")).unwrap();
    let mut body = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(body.next().unwrap(), "t,re,im,stderr,oracle_re,oracle_im,sigmas");
    let row: Vec<f64> = body.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let dev = ((row[1] - (-0.5f64).exp()).powi(2) + row[2].powi(2)).sqrt();
    assert!(dev <= 4.0 * row[3]);
}

#[test]
fn brownian_moments_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["brownian-moments", "--paths", "20000", "--grid=-1:1:5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("brownian-moments.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "n,t,empirical,oracle,stderr,sigmas");
}

#[test]
fn tightened_gate_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["transform-tk", "--tol", "norm=0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let s = summary(dir.path());
    let failed: Vec<&str> = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["norm"]);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["transform-tk", "--kernel", "cosine"],
        vec!["transform-tk", "--kernel", "szego", "--measure", "atoms: 1.5:1"],
        vec!["transform-tk", "--tol", "nosuchcheck=1"],
        vec!["brownian-moments", "--grid", "1:2:3"],
        vec!["inf-fourier", "--functional", "cube"],
        vec!["effective", "--ranks", "9"],
        vec!["set-kernel", "--sets", "a,z"],
        vec!["transform-tk", "--config", "/nonexistent/file.cfg"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 3\npaths = 5000\nfunctional = one\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["inf-fourier", "--config", cfg.to_str().unwrap(), "--seed", "4"], &out);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["config"]["seed"], "4");
    assert_eq!(s["config"]["paths"], "5000");
    assert_eq!(s["config"]["functional"], "one");
}

#[test]
fn stamp_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["transform-tk"], &a);
    run(&["transform-tk", "--stamp"], &b);
    let plain = std::fs::read_to_string(a.join("transform-tk.csv")).unwrap();
    let stamped = std::fs::read_to_string(b.join("transform-tk.csv")).unwrap();
    assert!(!plain.contains("# stamp"));
    assert!(stamped.contains("# stamp"));
    assert!(summary(&b).get("stamp").is_some());
}

#[test]
fn saved_paths_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("paths.bin");
    let o = run(
        &["brownian-moments", "--paths", "100", "--grid", "0:1:3", "--save-paths", file.to_str().unwrap()],
        &dir.path().join("o"),
    );
    assert_eq!(o.status.code(), Some(0));
    let pe = rkhs_transform::gaussian::PathEnsemble::load(&file).unwrap();
    assert_eq!(pe.len(), 100);
    assert_eq!(pe.grid(), &[0.0, 0.5, 1.0]);
}
