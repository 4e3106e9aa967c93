use std::path::Path;
use std::process::{Command, Output};

use gridscope_core::pipeline::checksum_tree;
use gridscope_core::simulate::scenarios;

fn gridscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridscope"))
        .args(args)
        .env("GRIDSCOPE_LOG", "error")
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    gridscope(args).status.code().unwrap()
}

fn write_tiny_config(dir: &Path) -> String {
    let mut cfg = scenarios::calibrated_scenario(7);
    cfg.duration = 36 * 3600;
    for s in &mut cfg.sites {
        s.pilot_arrival_rate /= 12.0;
    }
    let path = dir.join("tiny.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&["bogus"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["classify", "--out", "x.csv"]), 1);
    assert_eq!(
        code(&["stats", "--events", "e.csv", "--out", "d", "--bin-width", "soon"]),
        1
    );
    let out = gridscope(&["bogus"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["fit", "--help"]), 0);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        code(&[
            "classify",
            "--snapshots",
            &format!("{d}/none"),
            "--out",
            &format!("{d}/e.csv")
        ]),
        2
    );
    std::fs::write(dir.path().join("bad.json"), "{\"duration\": -1}").unwrap();
    assert_eq!(
        code(&[
            "simulate",
            "--config",
            &format!("{d}/bad.json"),
            "--out",
            &format!("{d}/sim")
        ]),
        2
    );
    assert_eq!(
        code(&[
            "fit",
            "--events",
            &format!("{d}/none.csv"),
            "--out",
            &format!("{d}/fits")
        ]),
        2
    );
}

#[test]
fn stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = write_tiny_config(dir.path());
    let sim = format!("{d}/sim");
    let events = format!("{d}/classify/events.csv");
    assert_eq!(code(&["simulate", "--config", &cfg, "--out", &sim]), 0);
    let before = checksum_tree(Path::new(&sim)).unwrap();
    assert_eq!(
        code(&["classify", "--snapshots", &format!("{sim}/snapshots"), "--out", &events]),
        0
    );
    assert_eq!(checksum_tree(Path::new(&sim)).unwrap(), before);
    assert_eq!(rows(Path::new(&events)), rows(&dir.path().join("sim/truth.csv")));

    assert_eq!(
        code(&[
            "stats",
            "--events",
            &events,
            "--out",
            &format!("{d}/stats"),
            "--deidentify"
        ]),
        0
    );
    assert_eq!(
        code(&[
            "fit",
            "--events",
            &events,
            "--cluster",
            "all",
            "--labels",
            "Retire,Preemption",
            "--out",
            &format!("{d}/fits")
        ]),
        0
    );
    assert_eq!(
        code(&[
            "fit",
            "--events",
            &events,
            "--cluster",
            "Nowhere",
            "--labels",
            "all",
            "--out",
            &format!("{d}/f2")
        ]),
        2
    );
    assert_eq!(
        code(&[
            "fit",
            "--events",
            &events,
            "--labels",
            "Sometimes",
            "--out",
            &format!("{d}/f3")
        ]),
        2
    );
    let report = format!("{d}/report/report.md");
    assert_eq!(
        code(&[
            "report",
            "--stats",
            &format!("{d}/stats"),
            "--fits",
            &format!("{d}/fits"),
            "--out",
            &report,
            "--truth",
            &format!("{sim}/truth.csv"),
            "--events",
            &events,
        ]),
        0
    );
    let md = std::fs::read_to_string(&report).unwrap();
    assert!(md.contains("## Validation against simulator truth"));
    assert!(md.contains("| C0 |"));
    for sub in ["sim", "classify", "stats", "fits", "report"] {
        assert!(dir.path().join(sub).join("manifest.json").exists(), "{sub}");
    }
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = write_tiny_config(dir.path());
    for run in ["a", "b"] {
        assert_eq!(
            code(&[
                "pipeline",
                "--config",
                &cfg,
                "--seed",
                "7",
                "--out",
                &format!("{d}/{run}")
            ]),
            0
        );
    }
    let (a, b) = (
        checksum_tree(&dir.path().join("a")).unwrap(),
        checksum_tree(&dir.path().join("b")).unwrap(),
    );
    assert!(a.len() > 20);
    assert_eq!(a, b);
    assert_eq!(
        code(&["pipeline", "--config", &cfg, "--seed", "8", "--out", &format!("{d}/c")]),
        0
    );
    assert_ne!(checksum_tree(&dir.path().join("c")).unwrap(), a);
}
