//! Descriptive statistics over classified termination events.

mod output;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{Label, TerminationEvent};
use crate::ingest::{PilotKey, UnixTime};
use crate::Scalar;

pub use output::{sanitize_file_component, write_stats_dir, StatsOptions, StatsOutputs};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no events")]
    EmptyInput,
    #[error("bin width must be positive, got {0}")]
    InvalidBinWidth(i64),
    #[error("no events labelled {0}")]
    NoSuchLabel(Label),
    #[error("no preemptions on cluster {0:?}")]
    NoSuchCluster(String),
    #[error("I/O error on {path}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Empirical distribution function over a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<S> {
    sorted: Vec<S>,
}

impl<S: Scalar> EmpiricalCdf<S> {
    /// NaNs are dropped.
    pub fn new(mut values: Vec<S>) -> Self {
        values.retain(|v| !v.is_nan());
        values.sort_by(|a, b| a.partial_cmp(b).expect("NaNs removed"));
        Self { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.sorted
    }

    /// Fraction of the sample `<= x`.
    pub fn eval(&self, x: S) -> S {
        if self.sorted.is_empty() {
            return S::zero();
        }
        let k = self.sorted.partition_point(|&v| v <= x);
        S::from_count(k) / S::from_count(self.sorted.len())
    }

    /// Smallest sample value `v` with `F(v) >= p`.
    pub fn quantile(&self, p: S) -> Option<S> {
        if self.sorted.is_empty() {
            return None;
        }
        let n = self.sorted.len();
        let k = (p * S::from_count(n)).ceil().to_usize().unwrap_or(0).clamp(1, n);
        Some(self.sorted[k - 1])
    }

    /// `(x, F(x))` at each distinct sample value.
    pub fn steps(&self) -> Vec<(S, S)> {
        let n = S::from_count(self.sorted.len());
        let mut out: Vec<(S, S)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = S::from_count(i + 1) / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }
}

/// Per-label event counts in fixed-width time bins starting at `origin`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventsOverTime {
    pub origin: UnixTime,
    pub bin_width: i64,
    pub counts: Vec<[usize; 5]>,
}

impl EventsOverTime {
    pub fn bin_start(&self, i: usize) -> UnixTime {
        self.origin + self.bin_width * i as i64
    }

    pub fn label_series(&self, label: Label) -> Vec<usize> {
        self.counts.iter().map(|c| c[label.index()]).collect()
    }
}

/// Bins events by `event_time`. `origin` defaults to the earliest event; events
/// before an explicit origin are discarded.
pub fn events_over_time(
    events: &[TerminationEvent],
    bin_width: i64,
    origin: Option<UnixTime>,
) -> Result<EventsOverTime, StatsError> {
    if bin_width <= 0 {
        return Err(StatsError::InvalidBinWidth(bin_width));
    }
    let earliest = events
        .iter()
        .map(|e| e.event_time)
        .min()
        .ok_or(StatsError::EmptyInput)?;
    let origin = origin.unwrap_or(earliest);
    let mut counts: Vec<[usize; 5]> = Vec::new();
    for e in events.iter().filter(|e| e.event_time >= origin) {
        let bin = ((e.event_time - origin) / bin_width) as usize;
        if counts.len() <= bin {
            counts.resize(bin + 1, [0; 5]);
        }
        counts[bin][e.label.index()] += 1;
    }
    Ok(EventsOverTime {
        origin,
        bin_width,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterCount {
    /// Output name: the resource name, or `C<i>` under de-identification.
    pub cluster: String,
    pub resource_name: String,
    pub count: usize,
    pub by_label: [usize; 5],
}

/// Maps resource names to `C0, C1, ...` by descending event count (ties by name).
pub fn deidentify_map(events: &[TerminationEvent]) -> BTreeMap<String, String> {
    let counts = count_by_cluster(events.iter());
    ranked(counts)
        .into_iter()
        .enumerate()
        .map(|(i, (name, _))| (name, format!("C{i}")))
        .collect()
}

fn count_by_cluster<'a>(events: impl Iterator<Item = &'a TerminationEvent>) -> HashMap<String, [usize; 5]> {
    let mut m: HashMap<String, [usize; 5]> = HashMap::new();
    for e in events {
        m.entry(e.resource_name.clone()).or_default()[e.label.index()] += 1;
    }
    m
}

fn ranked(counts: HashMap<String, [usize; 5]>) -> Vec<(String, [usize; 5])> {
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_by(|a, b| {
        let (ca, cb) = (a.1.iter().sum::<usize>(), b.1.iter().sum::<usize>());
        cb.cmp(&ca).then_with(|| a.0.cmp(&b.0))
    });
    v
}

/// Event counts per cluster, highest first, optionally restricted to one label.
/// De-identified names always come from the all-event ranking so they stay
/// stable across filters.
pub fn per_cluster_counts(events: &[TerminationEvent], label: Option<Label>, deidentify: bool) -> Vec<ClusterCount> {
    let names = deidentify.then(|| deidentify_map(events));
    let counts = count_by_cluster(events.iter().filter(|e| label.is_none_or(|l| e.label == l)));
    ranked(counts)
        .into_iter()
        .map(|(resource_name, by_label)| ClusterCount {
            cluster: names
                .as_ref()
                .map_or_else(|| resource_name.clone(), |m| m[&resource_name].clone()),
            count: by_label.iter().sum(),
            resource_name,
            by_label,
        })
        .collect()
}

/// Distribution of `instance_runtime` over events with `label`.
pub fn duration_cdf<S: Scalar>(events: &[TerminationEvent], label: Label) -> Result<EmpiricalCdf<S>, StatsError> {
    let v: Vec<S> = events
        .iter()
        .filter(|e| e.label == label)
        .map(|e| S::lit(e.instance_runtime as f64))
        .collect();
    if v.is_empty() {
        return Err(StatsError::NoSuchLabel(label));
    }
    Ok(EmpiricalCdf::new(v))
}

/// Distribution of `instance_runtime` over preemptions on one cluster.
pub fn time_to_preemption_cdf<S: Scalar>(
    events: &[TerminationEvent],
    resource_name: &str,
) -> Result<EmpiricalCdf<S>, StatsError> {
    let v: Vec<S> = events
        .iter()
        .filter(|e| e.label == Label::Preemption && e.resource_name == resource_name)
        .map(|e| S::lit(e.instance_runtime as f64))
        .collect();
    if v.is_empty() {
        return Err(StatsError::NoSuchCluster(resource_name.to_string()));
    }
    Ok(EmpiricalCdf::new(v))
}

/// How often pilots get preempted again after k preemptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreemptionChain {
    pub total_pilots: usize,
    /// `n[k-1]` = pilots preempted at least k times.
    pub n: Vec<usize>,
}

impl PreemptionChain {
    pub fn max_k(&self) -> usize {
        self.n.len()
    }

    pub fn n_k(&self, k: usize) -> usize {
        if k == 0 {
            return self.total_pilots;
        }
        self.n.get(k - 1).copied().unwrap_or(0)
    }

    pub fn ratio(&self, k: usize) -> f64 {
        if self.total_pilots == 0 {
            0.0
        } else {
            self.n_k(k) as f64 / self.total_pilots as f64
        }
    }

    /// `n_{k+1} / n_k`; zero when nobody reached k.
    pub fn conditional(&self, k: usize) -> f64 {
        let nk = self.n_k(k);
        if nk == 0 {
            0.0
        } else {
            self.n_k(k + 1) as f64 / nk as f64
        }
    }
}

/// Counts Preemption events per pilot key; every key with any event is a pilot.
pub fn preemption_chain(events: &[TerminationEvent]) -> PreemptionChain {
    let mut per_key: HashMap<&PilotKey, usize> = HashMap::new();
    for e in events {
        *per_key.entry(&e.pilot_key).or_default() += usize::from(e.label == Label::Preemption);
    }
    let k_max = per_key.values().copied().max().unwrap_or(0);
    let mut n = vec![0usize; k_max];
    for &c in per_key.values() {
        for slot in n.iter_mut().take(c) {
            *slot += 1;
        }
    }
    PreemptionChain {
        total_pilots: per_key.len(),
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterClass {
    Requeue,
    Destructive,
    NoPreempt,
}

impl std::fmt::Display for ClusterClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClusterClass::Requeue => "Requeue",
            ClusterClass::Destructive => "Destructive",
            ClusterClass::NoPreempt => "NoPreempt",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxonomyThresholds {
    pub min_pilots: usize,
    pub preempt_rate_floor: f64,
    pub requeue_fraction_split: f64,
}

impl Default for TaxonomyThresholds {
    fn default() -> Self {
        Self {
            min_pilots: 100,
            preempt_rate_floor: 0.01,
            requeue_fraction_split: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTaxonomy {
    pub resource_name: String,
    pub pilots: usize,
    /// Instance terminations (NetworkIssue gaps excluded).
    pub terminations: usize,
    pub preemptions: usize,
    pub requeued_preemptions: usize,
    pub class: ClusterClass,
}

impl ClusterTaxonomy {
    pub fn preemption_rate(&self) -> f64 {
        ratio(self.preemptions, self.terminations)
    }

    pub fn requeue_fraction(&self) -> f64 {
        ratio(self.requeued_preemptions, self.preemptions)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Sorted by resource name.
pub fn cluster_taxonomy(events: &[TerminationEvent], th: &TaxonomyThresholds) -> Vec<ClusterTaxonomy> {
    #[derive(Default)]
    struct Acc<'a> {
        pilots: BTreeSet<&'a PilotKey>,
        terminations: usize,
        preemptions: usize,
        requeued: usize,
    }
    let mut by: BTreeMap<&str, Acc> = BTreeMap::new();
    for e in events {
        let a = by.entry(&e.resource_name).or_default();
        a.pilots.insert(&e.pilot_key);
        if e.label != Label::NetworkIssue {
            a.terminations += 1;
        }
        if e.label == Label::Preemption {
            a.preemptions += 1;
            a.requeued += usize::from(e.is_requeued_preemption());
        }
    }
    by.into_iter()
        .map(|(name, a)| {
            let mut t = ClusterTaxonomy {
                resource_name: name.to_string(),
                pilots: a.pilots.len(),
                terminations: a.terminations,
                preemptions: a.preemptions,
                requeued_preemptions: a.requeued,
                class: ClusterClass::NoPreempt,
            };
            t.class = if t.pilots < th.min_pilots || t.preemption_rate() < th.preempt_rate_floor {
                ClusterClass::NoPreempt
            } else if t.requeue_fraction() >= th.requeue_fraction_split {
                ClusterClass::Requeue
            } else {
                ClusterClass::Destructive
            };
            t
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::classify::{Evidence, Label, TerminationEvent};
    use crate::ingest::PilotKey;

    pub fn event(job: &str, cluster: &str, label: Label, t: i64, runtime: i64) -> TerminationEvent {
        TerminationEvent {
            pilot_key: PilotKey::new(job, "E"),
            instance_name: format!("{job}@{t}"),
            resource_name: cluster.into(),
            site: "S".into(),
            event_time: t,
            label,
            instance_runtime: runtime,
            to_retire: 0,
            to_die: 0,
            evidence: Evidence::Destructive,
            censored_lookahead: false,
            daemon_start_time: t - runtime,
        }
    }
}
