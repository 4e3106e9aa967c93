use std::path::Path;

use gridscope_core::pipeline::*;
use gridscope_core::simulate::*;

fn tiny() -> SimConfig {
    let mut cfg = scenarios::calibrated_scenario(3);
    cfg.duration = 2 * 86_400;
    for s in &mut cfg.sites {
        s.pilot_arrival_rate /= 10.0;
    }
    cfg
}

fn manifests_under(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = checksum_tree(dir)
        .unwrap()
        .into_keys()
        .filter(|k| k.ends_with(MANIFEST_FILE))
        .collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let opts = PipelineOptions::default();
    let ra = run_pipeline(&tiny(), a.path(), &opts, "tiny.json").unwrap();
    let rb = run_pipeline(&tiny(), b.path(), &opts, "tiny.json").unwrap();
    assert_eq!(ra.manifest, rb.manifest);
    assert_eq!(checksum_tree(a.path()).unwrap(), checksum_tree(b.path()).unwrap());
    assert!(ra.validation.accuracy() > 0.9);
    assert_eq!(
        manifests_under(a.path()),
        [
            "classify/manifest.json",
            "fits/manifest.json",
            "report/manifest.json",
            "sim/manifest.json",
            "stats/manifest.json"
        ]
    );
    assert_eq!(RunManifest::read(a.path()).unwrap(), ra.manifest);
}

#[test]
fn skipping_snapshot_files_gives_the_same_analysis() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let with = PipelineOptions::default();
    let without = PipelineOptions {
        write_snapshots: false,
        ..Default::default()
    };
    let ra = run_pipeline(&tiny(), a.path(), &with, "tiny.json").unwrap();
    let rb = run_pipeline(&tiny(), b.path(), &without, "tiny.json").unwrap();
    assert_eq!(ra.events, rb.events);
    for sub in ["stats", "fits"] {
        let (ta, tb) = (
            checksum_tree(&a.path().join(sub)).unwrap(),
            checksum_tree(&b.path().join(sub)).unwrap(),
        );
        assert_eq!(ta, tb, "{sub}");
    }
    assert!(!b.path().join("sim/snapshots").exists());
}

#[test]
fn report_has_every_section() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(
        &tiny(),
        dir.path(),
        &PipelineOptions {
            write_snapshots: false,
            ..Default::default()
        },
        "tiny.json",
    )
    .unwrap();
    let md = std::fs::read_to_string(dir.path().join("report/report.md")).unwrap();
    for heading in [
        "## Class mix",
        "## Validation against simulator truth",
        "## Events over time",
        "## Clusters",
        "## Runtime by class",
        "## Repeated preemption",
        "## Cluster preemption policy",
        "## Configured lifetimes",
        "## Runtime distribution fits",
        "## Overall runtime mixture",
    ] {
        assert!(md.contains(heading), "missing {heading}");
    }
}

#[test]
fn stages_reject_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let ev = read_events(Path::new("/definitely/missing.csv"));
    assert!(matches!(ev, Err(PipelineError::Io { .. })));

    let mut b = gridscope_core::timeline::TimelineBuilder::new();
    run_simulation(&tiny(), &mut b).unwrap();
    let events = gridscope_core::classify::classify_events(&b.finish(), &Default::default());
    let opts = FitOptions {
        clusters: vec![Some("NoSuchCluster".into())],
        ..Default::default()
    };
    assert!(matches!(
        fit_stage(&events, dir.path(), &opts, "x"),
        Err(PipelineError::BadInput(_))
    ));
    assert!(matches!(
        report_stage(
            &dir.path().join("nothing"),
            dir.path(),
            &dir.path().join("r.md"),
            None,
            ("a", "b")
        ),
        Err(PipelineError::BadInput(_))
    ));
}
