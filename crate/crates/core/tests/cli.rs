use std::fs;
use std::path::Path;

use qcchain::cli::run_cli;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qc1d").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn dir_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn ghost_force_table_has_ghost_free_qcp() {
    let (code, out, _) = run(&["ghost-force"]);
    assert_eq!(code, 0);
    let qcp: Vec<f64> = out
        .lines()
        .filter(|l| l.starts_with("qcp "))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(qcp.len(), 2);
    assert!(qcp.iter().all(|r| *r <= 1e-13), "{out}");
    let qce = out.lines().find(|l| l.starts_with("qce ")).unwrap();
    let r: f64 = qce.split_whitespace().last().unwrap().parse().unwrap();
    assert!(r > 1e-6);
}

#[test]
fn solve_writes_one_row_per_atom() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dir_arg(tmp.path());
    let (code, out, err) = run(&["solve", "--n-atoms", "400", "--model", "gcr", "--m", "10", "--output-dir", &d]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("gcr:"));
    let csv = fs::read_to_string(tmp.path().join("solve_gcr_m10.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,position"));
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let (i, p) = l.split_once(',').unwrap();
            (i.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 400);
    assert!(rows.windows(2).all(|w| w[1].0 == w[0].0 + 1 && w[1].1 > w[0].1));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("solve_gcr_m10.json")).unwrap()).unwrap();
    assert_eq!(meta["converged"], true);
    assert_eq!(meta["params"]["residual_tolerance"], 1e-12);
}

#[test]
fn test1_output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (code, _, err) = run(&["test1", "--n-atoms", "2000", "--output-dir", &dir_arg(dir.path())]);
        assert_eq!(code, 0, "{err}");
    }
    let csv = fs::read_to_string(a.path().join("test1.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.path().join("test1.csv")).unwrap());
    assert_eq!(csv.lines().next(), Some("model,param,dof,m,error,iterations"));
    assert_eq!(csv.lines().count(), 1 + 4 * 7);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("test1.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["n_atoms"], 2000);
    assert_eq!(json["rows"].as_array().unwrap().len(), 28);
}

#[test]
fn test2_honours_a_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.toml");
    fs::write(
        &cfg,
        format!(
            "n_atoms = 1000\nmodels = [\"qcp\", \"qce\"]\ndof_list = [16, 32, 64]\noutput_dir = \"{}\"\n",
            tmp.path().join("out").display()
        ),
    )
    .unwrap();
    let (code, _, err) = run(&["test2", "--config", &cfg.display().to_string()]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(tmp.path().join("out").join("test2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let dofs: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(dofs, ["16", "32", "64", "16", "32", "64"]);
}

#[test]
fn fd_check_reports_small_deviations() {
    let (code, out, err) = run(&["fd-check", "--n-atoms", "200", "--model", "qcp"]);
    assert_eq!(code, 0, "{err}");
    let row = out.lines().find(|l| l.starts_with("qcp")).unwrap();
    let v: Vec<f64> = row.split_whitespace().skip(1).map(|s| s.parse().unwrap()).collect();
    assert!(v[0] <= 1e-6 && v[1] <= 1e-5, "{row}");
}

#[test]
fn validation_errors_exit_with_one() {
    for args in [
        vec!["solve", "--model", "nope"],
        vec!["solve", "--n-atoms", "7"],
        vec!["test1", "--cutoff", "0.5"],
        vec!["test2", "--n-atoms", "400"],
        vec!["ghost-force", "--models", "qcp,bogus"],
        vec!["frobnicate"],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "n_atom = 100\n").unwrap();
    let (code, _, err) = run(&["test1", "--config", &cfg.display().to_string()]);
    assert_eq!(code, 1);
    assert!(err.contains("n_atom"), "{err}");
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["ghost-force", "test1", "test2", "solve", "fd-check"] {
        assert!(out.contains(sub));
    }
}
