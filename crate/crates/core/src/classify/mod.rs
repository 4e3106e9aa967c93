//! Labels every instance termination, and every reappearance gap, with one of
//! five termination classes.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PilotKey, StartdState, UnixTime};
use crate::timeline::{InstanceRecord, PilotTimeline, TimelineSet, TrailEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Retire,
    Kill,
    IdleShutDown,
    Preemption,
    NetworkIssue,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Retire,
        Label::Kill,
        Label::IdleShutDown,
        Label::Preemption,
        Label::NetworkIssue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Retire => "Retire",
            Label::Kill => "Kill",
            Label::IdleShutDown => "IdleShutDown",
            Label::Preemption => "Preemption",
            Label::NetworkIssue => "NetworkIssue",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ClassifyError::UnknownLabel(s.to_string()))
    }
}

/// Which rule produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// Same Name and DaemonStartTime seen again after an absence.
    Reappeared,
    /// Vanished at or near GLIDEIN_ToDie.
    ReachedToDie,
    /// A later instance of the same pilot job appeared within the lookahead window.
    Requeued,
    /// Last ad was past ToRetire while running or retiring.
    RetiredAfterPayload,
    /// Idle pilot vanished after ToRetire.
    RetiredWhileIdle,
    /// Unclaimed for at least the idle timeout before ToRetire.
    IdleTimeout,
    /// No other rule applies.
    Destructive,
}

impl Evidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::Reappeared => "reappeared",
            Evidence::ReachedToDie => "reached_to_die",
            Evidence::Requeued => "requeued",
            Evidence::RetiredAfterPayload => "retired_after_payload",
            Evidence::RetiredWhileIdle => "retired_while_idle",
            Evidence::IdleTimeout => "idle_timeout",
            Evidence::Destructive => "destructive",
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("no termination events")]
    EmptyInput,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("events csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyParams {
    pub kill_tolerance: i64,
    pub idle_timeout: i64,
    pub lookahead: i64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            kill_tolerance: 600,
            idle_timeout: 1200,
            lookahead: 86_400,
        }
    }
}

mod key_column {
    use super::PilotKey;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(key: &PilotKey, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&key.to_column())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PilotKey, D::Error> {
        let s = String::deserialize(d)?;
        PilotKey::from_column(&s).ok_or_else(|| D::Error::custom(format!("bad pilot_key {s:?}")))
    }
}

/// One classified event; also a row of the events CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationEvent {
    #[serde(with = "key_column")]
    pub pilot_key: PilotKey,
    pub instance_name: String,
    pub resource_name: String,
    pub site: String,
    pub event_time: UnixTime,
    pub label: Label,
    pub instance_runtime: i64,
    pub to_retire: UnixTime,
    pub to_die: UnixTime,
    pub evidence: Evidence,
    pub censored_lookahead: bool,
    pub daemon_start_time: UnixTime,
}

impl TerminationEvent {
    pub fn is_requeued_preemption(&self) -> bool {
        self.label == Label::Preemption && self.evidence == Evidence::Requeued
    }
}

fn retire_or_idle(
    last: &TrailEntry,
    trail: &[TrailEntry],
    event_time: UnixTime,
    params: &ClassifyParams,
) -> Option<(Label, Evidence)> {
    match last.state {
        StartdState::Claimed | StartdState::Retiring if last.my_current_time >= last.to_retire => {
            return Some((Label::Retire, Evidence::RetiredAfterPayload))
        }
        StartdState::Unclaimed if event_time >= last.to_retire => {
            return Some((Label::Retire, Evidence::RetiredWhileIdle))
        }
        _ => {}
    }
    let idle_since = trail
        .iter()
        .rev()
        .take_while(|e| e.state == StartdState::Unclaimed)
        .last()
        .map(|e| e.my_current_time)?;
    (event_time - idle_since >= params.idle_timeout && event_time < last.to_retire)
        .then_some((Label::IdleShutDown, Evidence::IdleTimeout))
}

/// Applies the rules in order to the final disappearance of `instances[idx]`.
fn termination_label(
    instances: &[InstanceRecord],
    idx: usize,
    event_time: UnixTime,
    params: &ClassifyParams,
) -> (Label, Evidence) {
    let inst = &instances[idx];
    let last = inst.last_ad();
    if event_time >= last.to_die - params.kill_tolerance {
        return (Label::Kill, Evidence::ReachedToDie);
    }
    let horizon = event_time + params.lookahead;
    if instances[idx + 1..].iter().any(|later| later.first_seen <= horizon) {
        return (Label::Preemption, Evidence::Requeued);
    }
    retire_or_idle(last, &inst.ad_trail, event_time, params).unwrap_or((Label::Preemption, Evidence::Destructive))
}

/// Events of one pilot job, in instance order; gaps precede the instance's termination.
pub fn classify_timeline(
    timeline: &PilotTimeline,
    observation_end: UnixTime,
    params: &ClassifyParams,
) -> Vec<TerminationEvent> {
    let mut out = Vec::new();
    let near_end = |t: UnixTime| t + params.lookahead > observation_end;
    let event = |inst: &InstanceRecord, at: &TrailEntry, event_time, runtime, label, evidence| TerminationEvent {
        pilot_key: timeline.pilot_key.clone(),
        instance_name: inst.instance_name.clone(),
        resource_name: timeline.resource_name.clone(),
        site: timeline.site.clone(),
        event_time,
        label,
        instance_runtime: runtime,
        to_retire: at.to_retire,
        to_die: at.to_die,
        evidence,
        censored_lookahead: near_end(event_time),
        daemon_start_time: inst.daemon_start_time,
    };
    for (idx, inst) in timeline.instances.iter().enumerate() {
        for gap in &inst.gaps {
            let before = &inst.ad_trail[gap.trail_index - 1];
            out.push(event(
                inst,
                before,
                gap.missing_from,
                gap.start - inst.daemon_start_time,
                Label::NetworkIssue,
                Evidence::Reappeared,
            ));
        }
        if let Some(t) = inst.end_frame_time {
            let (label, evidence) = termination_label(&timeline.instances, idx, t, params);
            out.push(event(inst, inst.last_ad(), t, inst.runtime(), label, evidence));
        }
    }
    out
}

pub fn classify_events(set: &TimelineSet, params: &ClassifyParams) -> Vec<TerminationEvent> {
    let Some(end) = set.observation_end() else {
        return Vec::new();
    };
    set.timelines
        .iter()
        .flat_map(|tl| classify_timeline(tl, end, params))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSummary {
    pub total: usize,
    pub counts: BTreeMap<Label, usize>,
    pub fractions: BTreeMap<Label, f64>,
    pub distinct_pilots: usize,
    pub distinct_instances: usize,
}

impl LabelSummary {
    pub fn count(&self, label: Label) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn fraction(&self, label: Label) -> f64 {
        self.fractions.get(&label).copied().unwrap_or(0.0)
    }
}

/// Per-label counts and fractions; every label is present, possibly with zero.
pub fn summarize_labels(events: &[TerminationEvent]) -> Result<LabelSummary, ClassifyError> {
    if events.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let mut counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    let mut pilots = HashSet::new();
    let mut instances = HashSet::new();
    for e in events {
        *counts.entry(e.label).or_default() += 1;
        pilots.insert(&e.pilot_key);
        instances.insert((&e.pilot_key, &e.instance_name, e.daemon_start_time));
    }
    let total = events.len();
    let fractions = counts.iter().map(|(&l, &c)| (l, c as f64 / total as f64)).collect();
    Ok(LabelSummary {
        total,
        counts,
        fractions,
        distinct_pilots: pilots.len(),
        distinct_instances: instances.len(),
    })
}

pub fn write_events_csv<W: Write>(events: &[TerminationEvent], out: W) -> Result<(), ClassifyError> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(e)?;
    }
    if events.is_empty() {
        w.write_record([
            "pilot_key",
            "instance_name",
            "resource_name",
            "site",
            "event_time",
            "label",
            "instance_runtime",
            "to_retire",
            "to_die",
            "evidence",
            "censored_lookahead",
            "daemon_start_time",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_events_csv<R: Read>(input: R) -> Result<Vec<TerminationEvent>, ClassifyError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(ClassifyError::from)).collect()
}
