//! End-to-end runs of the `plastopt` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plastopt"));
    c.env_remove("THREADS");
    c
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args);
    if let Some(t) = threads {
        c.env("THREADS", t);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small cantilever so optimizer runs stay fast.
fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    let text = format!(
        "[mesh]\nnx = 12\nny = 6\n[loads]\ntraction = 0 -0.4\n[optimizer]\nvolume_penalty = 6\ngamma_schedule = 10 100\nmax_iter = 40\n{extra}"
    );
    std::fs::write(&p, text).unwrap();
    p
}

fn args<'a>(cmd: &'a str, cfg: &'a Path, out: &'a Path) -> Vec<&'a str> {
    vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = run(&["forward", "--out", "x"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    let o = run(&args("forward", &missing, dir.path()), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.cfg"));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["forward", "adjoint", "optimize", "gamma-sweep", "delta-sweep", "check", "material-verify", "mm-profile"] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}

#[test]
fn validation_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[optimizer]\ndelta = -0.1\n").unwrap();
    let o = run(&args("forward", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delta"), "{}", stderr(&o));

    std::fs::write(&cfg, "[solver]\ngamm = 10\n").unwrap();
    let o = run(&args("forward", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));

    let o = run(&args("forward", &small_config(dir.path(), ""), dir.path()), Some("zero"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fail.cfg");
    std::fs::write(&cfg, "[mesh]\nnx = 8\nny = 4\nwindow_lo = 0\nwindow_hi = 1\n[solver]\nmax_newton = 1\ntol = 1e-15\n").unwrap();
    let o = run(&args("forward", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("Newton"), "{}", stderr(&o));
}

#[test]
fn material_verify_reports_every_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = run(&args("material-verify", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for name in ["h1", "h2", "h3", "F-monotone", "b-lipschitz", "b-monotone", "Finv-lipschitz"] {
        assert!(out.contains(name), "{name}");
    }
    assert!(out.contains("violations 0"));
    assert!(dir.path().join("material_verify.csv").is_file());
}

#[test]
fn mm_profile_prints_one_sixth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/profile.cfg");
    let o = run(&args("mm-profile", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let energy: f64 = out
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().skip_while(|w| *w != "energy").nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!((energy - 1.0 / 6.0).abs() <= 2e-2, "{out}");
    assert!(out.starts_with("delta 0.02 "), "{out}");
}

#[test]
fn forward_writes_vtk_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = run(&args("forward", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let vtk = std::fs::read_to_string(dir.path().join("forward.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(vtk.contains("CELL_TYPES 144"));
    let echo = std::fs::read_to_string(dir.path().join("effective.cfg")).unwrap();
    assert!(echo.contains("nx = 12") && echo.contains("delta = 0.05"), "{echo}");
}

#[test]
fn check_rereads_its_vtk_consistently() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = run(&args("check", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("vtk re-read         PASS"), "{}", stdout(&o));
}

#[test]
fn optimize_then_check_the_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("opt");
    let o = run(&args("optimize", &cfg, &out), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let design = out.join("design.vtk");
    let mut a = args("check", &cfg, dir.path());
    a.extend(["--design", design.to_str().unwrap()]);
    let o = run(&a, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn adjoint_subcommand_checks_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "fd_directions = 4\n");
    let o = run(&args("adjoint", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let err: f64 = stdout(&o)
        .lines()
        .find(|l| l.starts_with("max relative error"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-4, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("fd_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn sweeps_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "delta_schedule = 0.2 0.1\n");
    let o = run(&args("gamma-sweep", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = std::fs::read_to_string(dir.path().join("gamma_report.csv")).unwrap();
    assert_eq!(rep.lines().count(), 3);
    let o = run(&args("delta-sweep", &cfg, dir.path()), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep = std::fs::read_to_string(dir.path().join("delta_report.csv")).unwrap();
    assert_eq!(rep.lines().count(), 3);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let mut outputs = Vec::new();
    for (i, threads) in [None, None, Some("4")].into_iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let o = run(&args("gamma-sweep", &cfg, &out), threads);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((
            std::fs::read(out.join("history.csv")).unwrap(),
            std::fs::read(out.join("gamma_report.csv")).unwrap(),
        ));
    }
    assert!(outputs[0].0.len() > 100);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}
