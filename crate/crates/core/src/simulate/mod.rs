//! Synthetic pilot pool producing snapshot frames with ground-truth labels.
//!
//! Each pilot job runs its own state machine driven by a private random
//! stream derived from `(seed, site, job)`; a sweep over snapshot instants
//! then reports what a collector would have held at each frame.

mod config;
mod engine;
pub mod scenarios;
mod truth;

use std::convert::Infallible;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classify::Label;
use crate::ingest::{write_snapshot_file, IngestError, PilotAd, PilotKey, SnapshotFrame, StartdState};
use crate::timeline::TimelineBuilder;

pub use config::{OutageBurst, OutageProcess, PayloadDuration, PreemptionHazard, SimConfig, SiteConfig};
pub use truth::{read_truth_csv, score_against_truth, write_truth_csv, TruthComparison, TruthRecord};

use engine::{exp_sample, InstanceLife, JobContext, PilotState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("truth csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<Infallible> for SimError {
    fn from(e: Infallible) -> Self {
        match e {}
    }
}

/// Destination for simulated frames, fed in time order.
pub trait FrameSink {
    fn accept(&mut self, frame: SnapshotFrame) -> Result<(), SimError>;
}

impl FrameSink for Vec<SnapshotFrame> {
    fn accept(&mut self, frame: SnapshotFrame) -> Result<(), SimError> {
        self.push(frame);
        Ok(())
    }
}

impl FrameSink for TimelineBuilder {
    fn accept(&mut self, frame: SnapshotFrame) -> Result<(), SimError> {
        self.push_frame(&frame);
        Ok(())
    }
}

/// Writes each frame as `snapshot_<t>.jsonl` into a directory.
pub struct SnapshotDirWriter {
    dir: PathBuf,
}

impl SnapshotDirWriter {
    pub fn create(dir: &Path) -> Result<Self, SimError> {
        fs::create_dir_all(dir).map_err(|source| SimError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self { dir: dir.to_path_buf() })
    }
}

impl FrameSink for SnapshotDirWriter {
    fn accept(&mut self, frame: SnapshotFrame) -> Result<(), SimError> {
        write_snapshot_file(&self.dir, &frame)?;
        Ok(())
    }
}

/// Fans frames out to two sinks.
pub struct Tee<'a, A, B>(pub &'a mut A, pub &'a mut B);

impl<A: FrameSink, B: FrameSink> FrameSink for Tee<'_, A, B> {
    fn accept(&mut self, frame: SnapshotFrame) -> Result<(), SimError> {
        self.0.accept(frame.clone())?;
        self.1.accept(frame)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimSummary {
    pub pilot_jobs: usize,
    pub instances: usize,
    /// Instances present in at least one frame.
    pub observed_instances: usize,
    pub frames: usize,
    pub ads: usize,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub truth: Vec<TruthRecord>,
    pub summary: SimSummary,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed ^ splitmix(a)) ^ b))
}

const ARRIVAL_STREAM: u64 = u64::MAX;

fn job_id(job: u32) -> String {
    format!("{}.0", 100_000 + job as u64)
}

fn frame_times(cfg: &SimConfig) -> Vec<i64> {
    (0..)
        .map(|k| cfg.start_time + k * cfg.snapshot_interval)
        .take_while(|&t| t <= cfg.end_time())
        .collect()
}

struct SiteStrings {
    entry: String,
    site: String,
    resource: String,
}

/// Runs `cfg`, handing every frame to `sink`, and returns the ground truth.
pub fn run_simulation<K: FrameSink>(cfg: &SimConfig, sink: &mut K) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    let frames = frame_times(cfg);
    let horizon = *frames.last().expect("duration > 0 gives at least one frame");

    let mut lives: Vec<InstanceLife> = Vec::new();
    let mut pilot_jobs = 0usize;
    for (si, site) in cfg.sites.iter().enumerate() {
        let payload = site
            .payload_duration
            .model()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let ctx = JobContext {
            cfg,
            site,
            site_index: si as u32,
            payload: &payload,
            horizon,
        };
        let stop = site.arrival_stop.map_or(horizon, |s| (cfg.start_time + s).min(horizon));
        let mut arrivals = stream(cfg.seed, si as u64, ARRIVAL_STREAM);
        let rate = site.pilot_arrival_rate / 3600.0;
        let mut t = cfg.start_time as f64;
        let mut job = 0u32;
        if rate <= 0.0 {
            continue;
        }
        loop {
            t += exp_sample(&mut arrivals, rate);
            let at = t.ceil() as i64;
            if at > stop {
                break;
            }
            let mut rng = stream(cfg.seed, si as u64, job as u64);
            lives.extend(engine::simulate_job(&ctx, job, at, &mut rng));
            job += 1;
        }
        pilot_jobs += job as usize;
    }
    lives.sort_by_key(|l| (l.start, l.site, l.job));

    let strings: Vec<SiteStrings> = cfg
        .sites
        .iter()
        .map(|s| SiteStrings {
            entry: s.entry_name.clone(),
            site: s.site.clone(),
            resource: s.resource_name.clone(),
        })
        .collect();
    let mut summary = SimSummary {
        pilot_jobs,
        instances: lives.len(),
        frames: frames.len(),
        ..Default::default()
    };
    let truth = sweep(&frames, &lives, &strings, sink, &mut summary)?;
    Ok(SimOutcome { truth, summary })
}

/// Simulates into `dir/snapshots/` and writes `dir/truth.csv`.
pub fn run_simulation_to_dir(cfg: &SimConfig, dir: &Path) -> Result<SimOutcome, SimError> {
    let mut writer = SnapshotDirWriter::create(&dir.join("snapshots"))?;
    let outcome = run_simulation(cfg, &mut writer)?;
    let path = dir.join("truth.csv");
    let f = fs::File::create(&path).map_err(|source| SimError::Io {
        path: path.clone(),
        source,
    })?;
    write_truth_csv(&outcome.truth, f)?;
    Ok(outcome)
}

#[derive(Default)]
struct Watch {
    ad_cursor: usize,
    seen: bool,
    hidden_since: Option<i64>,
}

fn sweep<K: FrameSink>(
    frames: &[i64],
    lives: &[InstanceLife],
    strings: &[SiteStrings],
    sink: &mut K,
    summary: &mut SimSummary,
) -> Result<Vec<TruthRecord>, SimError> {
    let mut truth = Vec::new();
    let mut active: Vec<(usize, Watch)> = Vec::new();
    let mut next_birth = 0usize;
    let key_of = |l: &InstanceLife| PilotKey::new(job_id(l.job), strings[l.site as usize].entry.clone());
    let record = |l: &InstanceLife, label: Label, t: i64| TruthRecord {
        pilot_key: key_of(l),
        instance_name: l.name.clone(),
        true_label: label,
        true_event_time: t,
    };

    for &ft in frames {
        while next_birth < lives.len() && lives[next_birth].start <= ft {
            active.push((next_birth, Watch::default()));
            next_birth += 1;
        }
        let mut ads = Vec::with_capacity(active.len());
        let mut keep = 0;
        for i in 0..active.len() {
            let (li, mut w) = std::mem::take(&mut active[i]);
            let life = &lives[li];
            if let Some((death, label)) = life.end {
                if death <= ft {
                    if w.seen {
                        truth.push(record(life, label, death));
                    }
                    continue;
                }
            }
            if life.outage_at(ft).is_some() {
                if w.seen && w.hidden_since.is_none() {
                    w.hidden_since = Some(ft);
                }
            } else {
                if let Some(h) = w.hidden_since.take() {
                    let (s, _) = life.outage_at(h).expect("hidden frame lies in an outage");
                    truth.push(record(life, Label::NetworkIssue, s));
                }
                while w.ad_cursor + 1 < life.ads.len() && life.ads[w.ad_cursor + 1].t <= ft {
                    w.ad_cursor += 1;
                }
                ads.push(render_ad(life, w.ad_cursor, &strings[life.site as usize]));
                if !w.seen {
                    w.seen = true;
                    summary.observed_instances += 1;
                }
            }
            active[keep] = (li, w);
            keep += 1;
        }
        active.truncate(keep);
        summary.ads += ads.len();
        sink.accept(SnapshotFrame { frame_time: ft, ads })?;
    }
    truth.sort_by(|a, b| {
        (a.true_event_time, &a.pilot_key, &a.instance_name, a.true_label).cmp(&(
            b.true_event_time,
            &b.pilot_key,
            &b.instance_name,
            b.true_label,
        ))
    });
    Ok(truth)
}

fn render_ad(life: &InstanceLife, cursor: usize, s: &SiteStrings) -> PilotAd {
    let ad = life.ads[cursor];
    let (state, activity) = match ad.state {
        PilotState::Idle => (StartdState::Unclaimed, "Idle"),
        PilotState::Busy => (StartdState::Claimed, "Busy"),
        PilotState::Retiring => (StartdState::Retiring, "Busy"),
    };
    let running = if ad.state == PilotState::Idle {
        0
    } else {
        ad.t - ad.payload_start
    };
    PilotAd {
        name: life.name.clone(),
        state,
        activity: activity.to_string(),
        my_current_time: ad.t,
        total_job_run_time: running,
        daemon_start_time: life.start,
        to_retire: life.to_retire,
        to_die: life.to_die,
        site: s.site.clone(),
        entry_name: s.entry.clone(),
        resource_name: s.resource.clone(),
        site_wms_job_id: job_id(life.job),
    }
}
