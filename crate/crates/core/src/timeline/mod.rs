//! Groups ads by pilot key and cuts each key's history into instances.
//!
//! An instance is identified by `(Name, DaemonStartTime)`. When an instance
//! vanishes from the snapshots and later comes back with the same identity,
//! the hole is recorded as a [`Gap`] instead of starting a new instance.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use crate::ingest::{PilotAd, PilotKey, SnapshotFrame, StartdState, UnixTime};

/// One ad as kept on an instance's trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailEntry {
    pub frame_time: UnixTime,
    pub state: StartdState,
    pub activity: Arc<str>,
    pub my_current_time: UnixTime,
    pub to_retire: UnixTime,
    pub to_die: UnixTime,
}

/// A stretch of frames during which an instance was absent but later returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    /// MyCurrentTime of the last ad before the gap.
    pub start: UnixTime,
    /// MyCurrentTime of the first ad after the gap.
    pub end: UnixTime,
    /// Time of the first frame the instance was missing from.
    pub missing_from: UnixTime,
    /// Time of the frame where it reappeared.
    pub reappeared_at: UnixTime,
    /// Trail index of the first ad after the gap.
    pub trail_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRecord {
    pub pilot_key: PilotKey,
    pub instance_name: String,
    pub daemon_start_time: UnixTime,
    pub first_seen: UnixTime,
    pub last_seen: UnixTime,
    pub ad_trail: Vec<TrailEntry>,
    pub gaps: Vec<Gap>,
    /// First frame after the last one containing this instance; `None` when
    /// the instance is still present in the final frame (right-censored).
    pub end_frame_time: Option<UnixTime>,
}

impl InstanceRecord {
    pub fn runtime(&self) -> i64 {
        instance_runtime(self)
    }

    pub fn is_censored(&self) -> bool {
        self.end_frame_time.is_none()
    }

    pub fn last_ad(&self) -> &TrailEntry {
        self.ad_trail.last().expect("instance has at least one ad")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotTimeline {
    pub pilot_key: PilotKey,
    pub resource_name: String,
    pub site: String,
    /// Ordered by DaemonStartTime.
    pub instances: Vec<InstanceRecord>,
}

impl PilotTimeline {
    pub fn aggregate_runtime(&self) -> i64 {
        self.instances.iter().map(instance_runtime).sum()
    }

    pub fn ad_count(&self) -> usize {
        self.instances.iter().map(|i| i.ad_trail.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// A new instance started earlier than the key's previous instance.
    DecreasingDaemonStartTime { previous: UnixTime, current: UnixTime },
    /// An instance came back after a later instance of the same key had appeared.
    ReappearedAfterLaterInstance,
    /// A frame not newer than the previous one was skipped.
    OutOfOrderFrame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub frame_time: UnixTime,
    pub pilot_key: Option<PilotKey>,
    pub instance_name: Option<String>,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimelineSet {
    /// Sorted by pilot key.
    pub timelines: Vec<PilotTimeline>,
    pub frame_times: Vec<UnixTime>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TimelineSet {
    pub fn observation_start(&self) -> Option<UnixTime> {
        self.frame_times.first().copied()
    }

    pub fn observation_end(&self) -> Option<UnixTime> {
        self.frame_times.last().copied()
    }

    pub fn instance_count(&self) -> usize {
        self.timelines.iter().map(|t| t.instances.len()).sum()
    }

    pub fn ad_count(&self) -> usize {
        self.timelines.iter().map(PilotTimeline::ad_count).sum()
    }

    pub fn instances(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.timelines.iter().flat_map(|t| t.instances.iter())
    }
}

/// `last_seen - daemon_start_time`.
pub fn instance_runtime(instance: &InstanceRecord) -> i64 {
    instance.last_seen - instance.daemon_start_time
}

/// Every instance that disappeared before the final frame, with the time of
/// the first frame it was missing from.
pub fn potential_terminations(set: &TimelineSet) -> Vec<(&InstanceRecord, UnixTime)> {
    set.instances()
        .filter_map(|i| i.end_frame_time.map(|t| (i, t)))
        .collect()
}

pub fn build_timelines(frames: &[SnapshotFrame]) -> TimelineSet {
    let mut builder = TimelineBuilder::new();
    for frame in frames {
        builder.push_frame(frame);
    }
    builder.finish()
}

struct KeySlot {
    timeline: PilotTimeline,
    /// Frame index of the latest ad, parallel to `timeline.instances`.
    last_frame: Vec<usize>,
}

/// Incremental timeline construction, one frame at a time in time order.
#[derive(Default)]
pub struct TimelineBuilder {
    // entry name -> job id -> slot index; two levels so lookups borrow the ad's strings
    index: HashMap<String, HashMap<String, usize>>,
    slots: Vec<KeySlot>,
    frame_times: Vec<UnixTime>,
    diagnostics: Vec<Diagnostic>,
    activities: HashMap<String, Arc<str>>,
}

impl TimelineBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn frame_count(&self) -> usize {
        self.frame_times.len()
    }

    pub fn push_frame(&mut self, frame: &SnapshotFrame) {
        if let Some(&last) = self.frame_times.last() {
            if frame.frame_time <= last {
                self.diagnostics.push(Diagnostic {
                    frame_time: frame.frame_time,
                    pilot_key: None,
                    instance_name: None,
                    kind: DiagnosticKind::OutOfOrderFrame,
                });
                return;
            }
        }
        let frame_idx = self.frame_times.len();
        self.frame_times.push(frame.frame_time);
        for ad in &frame.ads {
            self.push_ad(frame_idx, frame.frame_time, ad);
        }
    }

    fn activity(&mut self, s: &str) -> Arc<str> {
        if let Some(a) = self.activities.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.activities.insert(s.to_string(), a.clone());
        a
    }

    fn slot_for(&mut self, ad: &PilotAd) -> usize {
        if let Some(&i) = self
            .index
            .get(ad.entry_name.as_str())
            .and_then(|m| m.get(ad.site_wms_job_id.as_str()))
        {
            return i;
        }
        let i = self.slots.len();
        self.slots.push(KeySlot {
            timeline: PilotTimeline {
                pilot_key: ad.key(),
                resource_name: ad.resource_name.clone(),
                site: ad.site.clone(),
                instances: Vec::new(),
            },
            last_frame: Vec::new(),
        });
        self.index
            .entry(ad.entry_name.clone())
            .or_default()
            .insert(ad.site_wms_job_id.clone(), i);
        i
    }

    fn push_ad(&mut self, frame_idx: usize, frame_time: UnixTime, ad: &PilotAd) {
        let entry = TrailEntry {
            frame_time,
            state: ad.state.clone(),
            activity: self.activity(&ad.activity),
            my_current_time: ad.my_current_time,
            to_retire: ad.to_retire,
            to_die: ad.to_die,
        };
        let slot_idx = self.slot_for(ad);
        let slot = &mut self.slots[slot_idx];
        let instances = &mut slot.timeline.instances;
        let found = instances
            .iter()
            .rposition(|i| i.daemon_start_time == ad.daemon_start_time && i.instance_name == ad.name);
        match found {
            Some(pos) => {
                let inst = &mut instances[pos];
                let prev = slot.last_frame[pos];
                if prev + 1 < frame_idx {
                    let before = inst.last_ad().my_current_time;
                    inst.gaps.push(Gap {
                        start: before,
                        end: ad.my_current_time,
                        missing_from: self.frame_times[prev + 1],
                        reappeared_at: frame_time,
                        trail_index: inst.ad_trail.len(),
                    });
                    if pos + 1 < instances.len() {
                        self.diagnostics.push(Diagnostic {
                            frame_time,
                            pilot_key: Some(slot.timeline.pilot_key.clone()),
                            instance_name: Some(ad.name.clone()),
                            kind: DiagnosticKind::ReappearedAfterLaterInstance,
                        });
                    }
                }
                let inst = &mut instances[pos];
                inst.last_seen = ad.my_current_time;
                inst.ad_trail.push(entry);
                slot.last_frame[pos] = frame_idx;
            }
            None => {
                if let Some(prev) = instances.last() {
                    if ad.daemon_start_time < prev.daemon_start_time {
                        self.diagnostics.push(Diagnostic {
                            frame_time,
                            pilot_key: Some(slot.timeline.pilot_key.clone()),
                            instance_name: Some(ad.name.clone()),
                            kind: DiagnosticKind::DecreasingDaemonStartTime {
                                previous: prev.daemon_start_time,
                                current: ad.daemon_start_time,
                            },
                        });
                    }
                }
                instances.push(InstanceRecord {
                    pilot_key: slot.timeline.pilot_key.clone(),
                    instance_name: ad.name.clone(),
                    daemon_start_time: ad.daemon_start_time,
                    first_seen: ad.my_current_time,
                    last_seen: ad.my_current_time,
                    ad_trail: vec![entry],
                    gaps: Vec::new(),
                    end_frame_time: None,
                });
                slot.last_frame.push(frame_idx);
            }
        }
    }

    pub fn finish(self) -> TimelineSet {
        let frame_times = self.frame_times;
        let mut timelines: Vec<PilotTimeline> = self
            .slots
            .into_iter()
            .map(|slot| {
                let mut tl = slot.timeline;
                for (inst, &last) in tl.instances.iter_mut().zip(&slot.last_frame) {
                    inst.end_frame_time = frame_times.get(last + 1).copied();
                }
                tl.instances.sort_by(|a, b| {
                    (a.daemon_start_time, a.first_seen, &a.instance_name).cmp(&(
                        b.daemon_start_time,
                        b.first_seen,
                        &b.instance_name,
                    ))
                });
                tl
            })
            .collect();
        timelines.sort_by(|a, b| a.pilot_key.cmp(&b.pilot_key));
        TimelineSet {
            timelines,
            frame_times,
            diagnostics: self.diagnostics,
        }
    }
}

/// Debug dump, one row per instance.
pub fn write_timeline_csv<W: Write>(set: &TimelineSet, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "pilot_key",
        "instance_name",
        "resource_name",
        "daemon_start_time",
        "first_seen",
        "last_seen",
        "runtime",
        "ads",
        "gaps",
        "end_frame_time",
    ])?;
    for tl in &set.timelines {
        for i in &tl.instances {
            w.write_record([
                i.pilot_key.to_column(),
                i.instance_name.clone(),
                tl.resource_name.clone(),
                i.daemon_start_time.to_string(),
                i.first_seen.to_string(),
                i.last_seen.to_string(),
                i.runtime().to_string(),
                i.ad_trail.len().to_string(),
                i.gaps.len().to_string(),
                i.end_frame_time.map(|t| t.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn single_disappearance() {
        let frames = frames(3, |k| if k < 2 { vec![("1", "A", 0)] } else { vec![] });
        let set = build_timelines(&frames);
        assert_eq!(set.timelines.len(), 1);
        let inst = &set.timelines[0].instances[0];
        assert_eq!(inst.last_seen, 120);
        assert_eq!(inst.end_frame_time, Some(180));
        assert!(inst.gaps.is_empty());
    }

    #[test]
    fn name_change_starts_new_instance() {
        let frames = frames(8, |k| match k {
            0..=2 => vec![("1", "A", 0)],
            4..=7 => vec![("1", "B", 250)],
            _ => vec![],
        });
        let set = build_timelines(&frames);
        assert_eq!(set.timelines.len(), 1);
        let names: Vec<_> = set.timelines[0]
            .instances
            .iter()
            .map(|i| i.instance_name.as_str())
            .collect();
        assert_eq!(names, vec!["A", "B"]);
    }

    #[test]
    fn same_identity_reappearance_is_a_gap() {
        let frames = frames(9, |k| {
            if (2..4).contains(&k) {
                vec![]
            } else {
                vec![("1", "A", 0)]
            }
        });
        let set = build_timelines(&frames);
        let inst = &set.timelines[0].instances[0];
        assert_eq!(set.timelines[0].instances.len(), 1);
        assert_eq!(inst.gaps.len(), 1);
        let g = inst.gaps[0];
        assert_eq!((g.start, g.end), (120, 300));
        assert_eq!(g.missing_from, 180);
        assert!(g.start > inst.first_seen - 1 && g.end < inst.last_seen + 1);
    }

    #[test]
    fn runtime_is_last_seen_minus_start() {
        let mut inst = build_timelines(&frames(1, |_| vec![("1", "A", 40)])).timelines[0].instances[0].clone();
        inst.last_seen = 1000;
        inst.daemon_start_time = 400;
        assert_eq!(instance_runtime(&inst), 600);
        let zero = build_timelines(&frames(1, |_| vec![("1", "A", 60)]));
        assert_eq!(zero.timelines[0].instances[0].runtime(), 0);
    }

    #[test]
    fn runtime_matches_brute_force_over_trail() {
        let set = build_timelines(&frames(10, |_| vec![("1", "A", 7)]));
        let inst = &set.timelines[0].instances[0];
        let brute = inst.ad_trail.iter().map(|e| e.my_current_time).max().unwrap() - inst.daemon_start_time;
        assert_eq!(inst.runtime(), brute);
    }

    #[test]
    fn censored_and_terminated_counts() {
        let frames = frames(4, |k| {
            let mut v = vec![("1", "A", 0), ("2", "B", 0)];
            if k < 3 {
                v.push(("3", "C", 0));
            }
            if k < 2 {
                v.push(("4", "D", 0));
            }
            if k < 1 {
                v.push(("5", "E", 0));
            }
            v
        });
        let set = build_timelines(&frames);
        let terms = potential_terminations(&set);
        assert_eq!(terms.len(), 3);
        let e = terms.iter().find(|(i, _)| i.instance_name == "E").unwrap();
        assert_eq!(e.1, 120);
    }

    #[test]
    fn decreasing_start_time_is_diagnosed() {
        let frames = frames(4, |k| {
            if k < 2 {
                vec![("1", "A", 50)]
            } else {
                vec![("1", "A", 10)]
            }
        });
        let set = build_timelines(&frames);
        assert_eq!(set.timelines[0].instances.len(), 2);
        assert!(matches!(
            set.diagnostics[0].kind,
            DiagnosticKind::DecreasingDaemonStartTime {
                previous: 50,
                current: 10
            }
        ));
        assert_eq!(set.timelines[0].instances[0].daemon_start_time, 10);
    }

    #[test]
    fn stale_frame_is_skipped() {
        let mut frames = frames(2, |_| vec![("1", "A", 0)]);
        frames.push(frames[0].clone());
        let set = build_timelines(&frames);
        assert_eq!(set.frame_times, vec![60, 120]);
        assert_eq!(set.diagnostics[0].kind, DiagnosticKind::OutOfOrderFrame);
    }

    #[test]
    fn csv_dump_has_one_row_per_instance() {
        let set = build_timelines(&frames(3, |k| vec![("1", if k < 2 { "A" } else { "B" }, 0)]));
        let mut buf = Vec::new();
        write_timeline_csv(&set, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
