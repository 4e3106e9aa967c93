use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classify::{Label, TerminationEvent};
use crate::ingest::PilotKey;

/// What actually happened to an instance, or one of its outages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRecord {
    pub pilot_key: PilotKey,
    pub instance_name: String,
    pub true_label: Label,
    pub true_event_time: i64,
}

#[derive(Serialize, Deserialize)]
struct Row {
    #[serde(rename = "GLIDEIN_SITEWMS_JobId")]
    job: String,
    #[serde(rename = "GLIDEIN_Entry_Name")]
    entry: String,
    #[serde(rename = "Name")]
    name: String,
    true_label: Label,
    true_event_time: i64,
}

pub fn write_truth_csv<W: Write>(truth: &[TruthRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if truth.is_empty() {
        w.write_record([
            "GLIDEIN_SITEWMS_JobId",
            "GLIDEIN_Entry_Name",
            "Name",
            "true_label",
            "true_event_time",
        ])?;
    }
    for t in truth {
        w.serialize(Row {
            job: t.pilot_key.site_wms_job_id.clone(),
            entry: t.pilot_key.entry_name.clone(),
            name: t.instance_name.clone(),
            true_label: t.true_label,
            true_event_time: t.true_event_time,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv<R: Read>(input: R) -> csv::Result<Vec<TruthRecord>> {
    csv::Reader::from_reader(input)
        .deserialize::<Row>()
        .map(|r| {
            r.map(|r| TruthRecord {
                pilot_key: PilotKey::new(r.job, r.entry),
                instance_name: r.name,
                true_label: r.true_label,
                true_event_time: r.true_event_time,
            })
        })
        .collect()
}

/// Classified events paired with truth, per instance: outage records with
/// NetworkIssue events in time order, the remaining record with the
/// termination event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruthComparison {
    /// Events compared (censored ones skipped when requested).
    pub compared: usize,
    pub matched: usize,
    /// `confusion[truth][predicted]`, indexed by `Label::index`.
    pub confusion: [[usize; 5]; 5],
    /// Events without a truth record.
    pub unmatched_events: usize,
    /// Truth records without an event.
    pub unmatched_truth: usize,
}

impl TruthComparison {
    pub fn accuracy(&self) -> f64 {
        if self.compared == 0 {
            0.0
        } else {
            self.matched as f64 / self.compared as f64
        }
    }
}

pub fn score_against_truth(events: &[TerminationEvent], truth: &[TruthRecord], skip_censored: bool) -> TruthComparison {
    #[derive(Default)]
    struct Slot<'a> {
        gaps: Vec<&'a TruthRecord>,
        end: Option<&'a TruthRecord>,
        extra: usize,
    }
    let mut by: HashMap<(&PilotKey, &str), Slot> = HashMap::new();
    for t in truth {
        let s = by.entry((&t.pilot_key, t.instance_name.as_str())).or_default();
        if t.true_label == Label::NetworkIssue {
            s.gaps.push(t);
        } else if s.end.is_none() {
            s.end = Some(t);
        } else {
            s.extra += 1;
        }
    }
    for s in by.values_mut() {
        s.gaps.sort_by_key(|t| t.true_event_time);
    }

    let mut sorted: Vec<&TerminationEvent> = events.iter().collect();
    sorted.sort_by_key(|e| e.event_time);
    let mut cmp = TruthComparison::default();
    let mut used = 0usize;
    let mut gap_pos: HashMap<(&PilotKey, &str), usize> = HashMap::new();
    for e in sorted {
        let key = (&e.pilot_key, e.instance_name.as_str());
        let found = by.get_mut(&key).and_then(|s| {
            if e.label == Label::NetworkIssue {
                let p = gap_pos.entry(key).or_default();
                let t = s.gaps.get(*p).copied();
                *p += 1;
                t
            } else {
                s.end.take()
            }
        });
        match found {
            Some(t) => {
                used += 1;
                if skip_censored && e.censored_lookahead {
                    continue;
                }
                cmp.compared += 1;
                cmp.confusion[t.true_label.index()][e.label.index()] += 1;
                if t.true_label == e.label {
                    cmp.matched += 1;
                }
            }
            None => {
                cmp.unmatched_events += 1;
                if !(skip_censored && e.censored_lookahead) {
                    cmp.compared += 1;
                }
            }
        }
    }
    cmp.unmatched_truth = truth.len() - used;
    cmp
}
