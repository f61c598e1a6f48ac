use std::path::Path;
use std::process::{Command, Output};

fn gpwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpwb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn fixture_run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "mode = \"higgs\"\n[lattice]\nn = 16\namplitude = 2.0\n[fixture]\ndegrees = [[1, -1], [0]]\nsupport = [{ component = [2, 0] }]\nc = [0, 0]\nsmooth = true\n",
    );
    let out = dir.path().join("out");
    let o = gpwb(&[
        "higgs",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--tol",
        "1e-9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report, String::from_utf8(o.stdout).unwrap());
    assert!(report.contains("config.flow.tol = 1e-9\n"));
    assert!(report.contains("fixture.0.flow.converged = true\n"));
    let csv = std::fs::read_to_string(out.join("fixture_0.csv")).unwrap();
    assert!(csv.starts_with("iteration,l2_residual,linf_residual,sup_log_metric\n"));
    assert!(out.join("timing.txt").exists());
}

#[test]
fn diverging_flow_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "mode = \"higgs\"\n[lattice]\nn = 16\namplitude = 2.0\n[fixture]\ndegrees = [[1, -1], [0]]\nc = [0, 0]\n",
    );
    let o = gpwb(&["run", "--config", &cfg]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("fixture.0.verdict.stable = false\n"));
    assert!(text.contains("fixture.0.flow.diverged = true\n"));
}

#[test]
fn config_errors_are_located_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "mode = \"pair\"\n[lattice]\nn = 16\nsize = 3\n");
    let o = gpwb(&["pair", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");

    let other = write(dir.path(), "other.toml", "mode = \"triple\"\n");
    let o = gpwb(&["pair", "--config", &other]);
    assert_eq!(o.status.code(), Some(2));

    let o = gpwb(&["pair", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let o = gpwb(&["pair", "--tol=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("flow.tol"));
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        "mode = \"twisted_triple\"\nseed = 5\n[lattice]\nn = 16\n[batch]\ncount = 3\nssc_trials = 20\n[flow]\nenabled = true\nmax_iter = 60\n",
    );
    let mut texts = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(format!("w{w}"));
        let o = gpwb(&[
            "twisted-triple",
            "--config",
            &cfg,
            "--workers",
            w,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "timing.txt")
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        texts.push(files);
    }
    assert!(texts[0].len() >= 2);
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn help_lists_modes() {
    let o = gpwb(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for m in [
        "kempf-ness",
        "vortex-threshold",
        "pair",
        "triple",
        "coherent-system",
        "twisted-triple",
        "higgs",
        "invariant-suite",
        "run",
    ] {
        assert!(text.contains(m), "{m}");
    }
    assert!(gpwb(&["invariant_suite", "--help"]).status.success());
}
