//! End-to-end tests of the `lakevort` binary: exit codes, file outputs,
//! determinism, and error reporting.

use std::path::Path;
use std::process::{Command, Output};

fn run(config: &str, dir: &Path, args: &[&str]) -> Output {
    let cfg_path = dir.join("exp.cfg");
    std::fs::write(&cfg_path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_lakevort"))
        .args(args)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn invariants_pass_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "geometry = disk\nprofile = parabolic\nn = 48\neps = 0.2\n",
        dir.path(),
        &["invariants"],
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("pass"));
    assert!(!stdout.contains("FAIL"));
    assert!(dir.path().join("out/invariants.txt").exists());
}

#[test]
fn invariants_fail_nonzero_on_inconsistent_circulations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "geometry = annulus\nprofile = const\nn = 48\nr_inner = 0.4\neps = 0.2\n\
         circulations = 0.9, 0.9\n",
        dir.path(),
        &["invariants"],
    );
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn unknown_key_is_reported_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("n = 32\nwobble = 3\n", dir.path(), &["invariants"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(stderr.contains("wobble"), "{stderr}");
}

#[test]
fn inadmissible_rotation_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "geometry = disk\nprofile = parabolic\ntau = 0.7\npsi = rotation\nnu = 0.5\nn = 128\n",
        dir.path(),
        &["maximize"],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("admissible"), "{stderr}");
}

#[test]
fn figure1_outputs_are_deterministic() {
    let cfg = "geometry = disk\nprofile = parabolic\ntau = 0.7\nnu_points = 6\n";
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let out1 = run(cfg, dir1.path(), &["figure1"]);
    let out2 = run(cfg, dir2.path(), &["figure1"]);
    assert!(out1.status.success() && out2.status.success());
    for name in ["depth.txt", "mtP.txt", "mtN.txt", "depth_mtP.txt", "depth_mtN.txt"] {
        let a = std::fs::read(dir1.path().join("out").join(name)).unwrap();
        let b = std::fs::read(dir2.path().join("out").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        // two-column numeric rows
        let text = String::from_utf8(a).unwrap();
        for line in text.lines() {
            assert_eq!(line.split_whitespace().count(), 2, "{name}: `{line}`");
        }
    }
}

#[test]
fn maximize_writes_state_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "geometry = disk\nprofile = parabolic\ntau = 1.0\neps = 0.25\nn = 48\n\
         ascent_max_iter = 300\nrel_tol = 1e-8\n",
        dir.path(),
        &["maximize"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let state = std::fs::read_to_string(dir.path().join("out/state.txt")).unwrap();
    assert!(state.starts_with("# tau=1 eps=0.25"));
    let trace = std::fs::read_to_string(dir.path().join("out/trace.txt")).unwrap();
    let energies: Vec<f64> = trace
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let report = std::fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(report.contains("steadiness_residual ="));
    assert!(report.contains("part_minus = absent"));
}

#[test]
fn eps_sweep_flags_missing_negative_part() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "geometry = disk\nprofile = parabolic\ntau = 1.0\nn = 48\n\
         eps_list = 0.3, 0.25, 0.2\nascent_max_iter = 300\nrel_tol = 1e-8\n",
        dir.path(),
        &["eps-sweep"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("negative part absent"), "{stdout}");
    let sweep = std::fs::read_to_string(dir.path().join("out/sweep.txt")).unwrap();
    for line in sweep.lines() {
        assert_eq!(line.split_whitespace().count(), 3, "`{line}`");
    }
}

#[test]
fn green_check_guards_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("geometry = slit_square\nn = 32\n", dir.path(), &["green-check"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Green"), "{stderr}");
}

#[test]
fn thread_env_override_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg_path,
        "geometry = disk\nprofile = parabolic\ntau = 0.7\nnu_points = 4\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lakevort"))
        .env("LAKEVORT_THREADS", "1")
        .arg("figure1")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success());
}
