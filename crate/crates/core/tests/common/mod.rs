#![allow(dead_code)]

use gridscope_core::ingest::{PilotAd, SnapshotFrame, StartdState, UnixTime};
use proptest::prelude::*;

pub const FRAME: i64 = 60;

pub fn ad(job: &str, name: &str, start: UnixTime, t: UnixTime) -> PilotAd {
    PilotAd {
        name: name.into(),
        state: StartdState::Claimed,
        activity: "Busy".into(),
        my_current_time: t,
        total_job_run_time: 0,
        daemon_start_time: start,
        to_retire: start + 54_000,
        to_die: start + 82_800,
        site: "S".into(),
        entry_name: "E".into(),
        resource_name: "R".into(),
        site_wms_job_id: job.into(),
    }
}

/// One pilot's presence pattern: which frames it is visible in, and the
/// instance (0, 1, ...) visible there.
#[derive(Debug, Clone)]
pub struct Presence {
    pub job: String,
    pub frames: Vec<Option<u8>>,
}

/// Random presence patterns over `n_frames` frames. Instance indices never
/// decrease along a pattern, as with real restarts.
pub fn presences(max_pilots: usize, n_frames: usize) -> impl Strategy<Value = Vec<Presence>> {
    prop::collection::vec(prop::collection::vec((any::<bool>(), 0u8..3), n_frames), 1..=max_pilots).prop_map(|pilots| {
        pilots
            .into_iter()
            .enumerate()
            .map(|(j, cells)| {
                let mut inst = 0u8;
                let frames = cells
                    .into_iter()
                    .map(|(visible, bump)| {
                        if bump == 0 {
                            inst += 1;
                        }
                        visible.then_some(inst)
                    })
                    .collect();
                Presence {
                    job: format!("{j}.0"),
                    frames,
                }
            })
            .collect()
    })
}

/// Frames at `FRAME` spacing built from presence patterns. Instance `i` of a
/// pilot starts at `i * 10_000` and is named `job-i`.
pub fn frames_from(pilots: &[Presence], n_frames: usize) -> Vec<SnapshotFrame> {
    (0..n_frames)
        .map(|k| {
            let t = 100_000 + FRAME * k as i64;
            let ads = pilots
                .iter()
                .filter_map(|p| p.frames[k].map(|i| ad(&p.job, &format!("{}-{i}", p.job), i64::from(i) * 10_000, t)))
                .collect();
            SnapshotFrame { frame_time: t, ads }
        })
        .collect()
}
