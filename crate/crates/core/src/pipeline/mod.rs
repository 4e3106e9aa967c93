//! The file-based stages shared by the command-line tool:
//! simulate -> classify -> stats -> fit -> report.

mod manifest;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    classify_events, read_events_csv, write_events_csv, ClassifyError, ClassifyParams, Label, TerminationEvent,
};
use crate::distfit::classes::{
    config_histograms, fit_cluster, write_fits_csv, write_histogram_csv, write_mixture_csv, ClusterFits,
};
use crate::distfit::{Family, FitConfig};
use crate::ingest::{stream_snapshot_dir, IngestError, IngestOptions};
use crate::simulate::{
    read_truth_csv, run_simulation, run_simulation_to_dir, score_against_truth, write_truth_csv, SimConfig, SimError,
    TruthComparison,
};
use crate::stats::{write_stats_dir, StatsError, StatsOptions, StatsOutputs};
use crate::timeline::TimelineBuilder;

pub use manifest::{checksum_tree, sha256_file, RunManifest, MANIFEST_FILE};
pub use report::render_report;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    BadInput(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn create_file(path: &Path) -> Result<fs::File, PipelineError> {
    fs::File::create(path).map_err(io_err(path))
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("parameters serialize")
}

/// Runs the simulator into `out/snapshots`, `out/truth.csv` and `out/manifest.json`.
pub fn simulate_stage(
    cfg: &SimConfig,
    out: &Path,
    config_input: &str,
) -> Result<crate::simulate::SimOutcome, PipelineError> {
    create_dir(out)?;
    let outcome = run_simulation_to_dir(cfg, out)?;
    RunManifest::new("simulate", vec![config_input.to_string()], to_json(cfg), Some(cfg.seed)).write(out)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassifyOutcome {
    pub frames: usize,
    pub ads: usize,
    pub malformed_lines: usize,
    pub frame_gaps: usize,
    pub diagnostics: usize,
    pub events: usize,
}

#[derive(Serialize)]
struct ClassifyManifestParams<'a> {
    classify: &'a ClassifyParams,
    skew_tolerance: i64,
    gap_tolerance: i64,
    strict: bool,
    summary: &'a ClassifyOutcome,
}

fn out_dir_of(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Reads a snapshot directory and writes the events CSV, plus a manifest in
/// the CSV's directory (and `quarantine.csv` when lines were rejected).
pub fn classify_stage(
    snapshots: &Path,
    out_csv: &Path,
    params: &ClassifyParams,
    ingest: &IngestOptions,
    snapshots_input: &str,
) -> Result<(Vec<TerminationEvent>, ClassifyOutcome), PipelineError> {
    let dir = out_dir_of(out_csv);
    create_dir(&dir)?;
    let mut builder = TimelineBuilder::new();
    let report = stream_snapshot_dir(snapshots, ingest, |f| builder.push_frame(&f))?;
    let set = builder.finish();
    let events = classify_events(&set, params);
    write_events_csv(&events, create_file(out_csv)?)?;
    if !report.quarantine.is_empty() {
        let path = dir.join("quarantine.csv");
        let mut w = csv::Writer::from_writer(create_file(&path)?);
        w.write_record(["file", "line_no", "reason"])?;
        for q in &report.quarantine {
            let file = q
                .file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            w.write_record([file, q.line_no.to_string(), q.reason.clone()])?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    let outcome = ClassifyOutcome {
        frames: report.frame_count,
        ads: report.ad_count,
        malformed_lines: report.quarantine.len(),
        frame_gaps: report.gaps.len(),
        diagnostics: set.diagnostics.len(),
        events: events.len(),
    };
    let mp = ClassifyManifestParams {
        classify: params,
        skew_tolerance: ingest.skew_tolerance,
        gap_tolerance: ingest.gap_tolerance,
        strict: ingest.strict,
        summary: &outcome,
    };
    RunManifest::new("classify", vec![snapshots_input.to_string()], to_json(&mp), None).write(&dir)?;
    Ok((events, outcome))
}

pub fn read_events(path: &Path) -> Result<Vec<TerminationEvent>, PipelineError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    Ok(read_events_csv(f)?)
}

pub fn stats_stage(
    events: &[TerminationEvent],
    out: &Path,
    opts: &StatsOptions,
    events_input: &str,
) -> Result<StatsOutputs, PipelineError> {
    let written = write_stats_dir(out, events, opts)?;
    RunManifest::new("stats", vec![events_input.to_string()], to_json(opts), None).write(out)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Resource names to fit; `None` pools every cluster under the name `all`.
    pub clusters: Vec<Option<String>>,
    pub labels: Vec<Label>,
    pub families: Vec<Family>,
    pub histogram_bin_hours: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            clusters: vec![None],
            labels: Label::ALL.to_vec(),
            families: Family::ALL.to_vec(),
            histogram_bin_hours: 0.5,
            seed: FitConfig::<f64>::default().seed,
        }
    }
}

pub const RETIRE_HISTOGRAM_FILE: &str = "histogram_to_retire.csv";
pub const DIE_HISTOGRAM_FILE: &str = "histogram_to_die.csv";

/// Writes `fits.csv`, `mixture.csv` and the two configuration histograms.
pub fn fit_stage(
    events: &[TerminationEvent],
    out: &Path,
    opts: &FitOptions,
    events_input: &str,
) -> Result<Vec<ClusterFits<f64>>, PipelineError> {
    create_dir(out)?;
    for c in opts.clusters.iter().flatten() {
        if !events.iter().any(|e| &e.resource_name == c) {
            return Err(PipelineError::BadInput(format!("no events on cluster {c:?}")));
        }
    }
    let cfg = FitConfig {
        seed: opts.seed,
        ..FitConfig::default()
    };
    let fits: Vec<ClusterFits<f64>> = opts
        .clusters
        .iter()
        .map(|c| fit_cluster(events, c.as_deref(), &opts.labels, &opts.families, &cfg))
        .collect();
    write_fits_csv(&fits, create_file(&out.join("fits.csv"))?)?;
    write_mixture_csv(&fits, create_file(&out.join("mixture.csv"))?)?;
    let h = config_histograms(events, opts.histogram_bin_hours);
    write_histogram_csv(&h.retire, create_file(&out.join(RETIRE_HISTOGRAM_FILE))?)?;
    write_histogram_csv(&h.die, create_file(&out.join(DIE_HISTOGRAM_FILE))?)?;
    RunManifest::new("fit", vec![events_input.to_string()], to_json(opts), Some(opts.seed)).write(out)?;
    Ok(fits)
}

/// Renders `report.md` into the report file's directory, with a manifest.
pub fn report_stage(
    stats: &Path,
    fits: &Path,
    out_md: &Path,
    validation: Option<&TruthComparison>,
    inputs: (&str, &str),
) -> Result<(), PipelineError> {
    let dir = out_dir_of(out_md);
    create_dir(&dir)?;
    let text = render_report(stats, fits, validation)?;
    fs::write(out_md, text).map_err(io_err(out_md))?;
    RunManifest::new(
        "report",
        vec![inputs.0.to_string(), inputs.1.to_string()],
        serde_json::json!({ "validation": validation.is_some() }),
        None,
    )
    .write(&dir)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub classify: ClassifyParams,
    pub ingest_strict: bool,
    pub stats: StatsOptions,
    pub fit: FitOptions,
    /// Write snapshot files; when off, frames go straight to the classifier.
    pub write_snapshots: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            classify: ClassifyParams::default(),
            ingest_strict: false,
            stats: StatsOptions::default(),
            fit: FitOptions::default(),
            write_snapshots: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub events: Vec<TerminationEvent>,
    pub validation: TruthComparison,
    pub fits: Vec<ClusterFits<f64>>,
    pub manifest: RunManifest,
}

/// Every stage in sequence under `out`: `sim/`, `classify/`, `stats/`,
/// `fits/`, `report/`, plus a top-level manifest over all of them.
pub fn run_pipeline(
    cfg: &SimConfig,
    out: &Path,
    opts: &PipelineOptions,
    config_input: &str,
) -> Result<PipelineSummary, PipelineError> {
    let (sim, classify, stats, fits, report) = (
        out.join("sim"),
        out.join("classify"),
        out.join("stats"),
        out.join("fits"),
        out.join("report"),
    );
    let events_csv = classify.join("events.csv");
    create_dir(out)?;
    let ingest = IngestOptions {
        strict: opts.ingest_strict,
        ..IngestOptions::default()
    };

    let (events, truth) = if opts.write_snapshots {
        simulate_stage(cfg, &sim, config_input)?;
        let (events, _) = classify_stage(
            &sim.join("snapshots"),
            &events_csv,
            &opts.classify,
            &ingest,
            "../sim/snapshots",
        )?;
        let truth_path = sim.join("truth.csv");
        let truth = read_truth_csv(fs::File::open(&truth_path).map_err(io_err(&truth_path))?)?;
        (events, truth)
    } else {
        create_dir(&sim)?;
        create_dir(&classify)?;
        let mut builder = TimelineBuilder::new();
        let outcome = run_simulation(cfg, &mut builder)?;
        write_truth_csv(&outcome.truth, create_file(&sim.join("truth.csv"))?)?;
        RunManifest::new("simulate", vec![config_input.to_string()], to_json(cfg), Some(cfg.seed)).write(&sim)?;
        let set = builder.finish();
        let events = classify_events(&set, &opts.classify);
        write_events_csv(&events, create_file(&events_csv)?)?;
        RunManifest::new("classify", vec!["../sim".into()], to_json(&opts.classify), None).write(&classify)?;
        (events, outcome.truth)
    };
    let validation = score_against_truth(&events, &truth, true);

    stats_stage(&events, &stats, &opts.stats, "../classify/events.csv")?;
    let fitted = fit_stage(&events, &fits, &opts.fit, "../classify/events.csv")?;
    report_stage(
        &stats,
        &fits,
        &report.join("report.md"),
        Some(&validation),
        ("../stats", "../fits"),
    )?;

    let manifest = RunManifest::new(
        "pipeline",
        vec![config_input.to_string()],
        serde_json::json!({ "config": cfg, "options": opts }),
        Some(cfg.seed),
    )
    .write(out)?;
    Ok(PipelineSummary {
        events,
        validation,
        fits: fitted,
        manifest,
    })
}
