//! CSV tables written by the `stats` stage.

use std::fs;
use std::path::{Path, PathBuf};

use super::*;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsOptions {
    pub bin_width: i64,
    /// Bin origin; earliest event when absent.
    pub origin: Option<UnixTime>,
    pub deidentify: bool,
    pub taxonomy: TaxonomyThresholds,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            bin_width: 3600,
            origin: None,
            deidentify: false,
            taxonomy: TaxonomyThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StatsOutputs {
    pub files: Vec<PathBuf>,
}

/// Keeps `[A-Za-z0-9._-]`, replacing everything else with `_`.
pub fn sanitize_file_component(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), StatsError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|source| StatsError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn cdf(&mut self, name: &str, cdf: &EmpiricalCdf<f64>) -> Result<(), StatsError> {
        let rows = cdf
            .steps()
            .into_iter()
            .map(|(x, f)| vec![x.to_string(), f.to_string()])
            .collect();
        self.table(name, &["runtime_seconds", "cdf"], rows)
    }
}

fn label_header(first: &[&'static str]) -> Vec<&'static str> {
    first
        .iter()
        .copied()
        .chain(Label::ALL.iter().map(|l| l.as_str()))
        .collect()
}

/// Writes every stats table for `events` into `dir` (created if missing).
pub fn write_stats_dir(
    dir: &Path,
    events: &[TerminationEvent],
    opts: &StatsOptions,
) -> Result<StatsOutputs, StatsError> {
    let summary = crate::classify::summarize_labels(events).map_err(|_| StatsError::EmptyInput)?;
    fs::create_dir_all(dir).map_err(|source| StatsError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Out { dir, files: Vec::new() };

    out.table(
        "class_mix.csv",
        &["label", "count", "fraction"],
        Label::ALL
            .iter()
            .map(|&l| {
                vec![
                    l.to_string(),
                    summary.count(l).to_string(),
                    summary.fraction(l).to_string(),
                ]
            })
            .collect(),
    )?;

    let bins = events_over_time(events, opts.bin_width, opts.origin)?;
    out.table(
        "events_over_time.csv",
        &label_header(&["bin_start", "bin_index"]),
        bins.counts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut row = vec![bins.bin_start(i).to_string(), i.to_string()];
                row.extend(c.iter().map(usize::to_string));
                row
            })
            .collect(),
    )?;

    let names = if opts.deidentify {
        deidentify_map(events)
    } else {
        events
            .iter()
            .map(|e| (e.resource_name.clone(), e.resource_name.clone()))
            .collect::<BTreeMap<_, _>>()
    };
    out.table(
        "cluster_counts.csv",
        &label_header(&["cluster", "count"]),
        per_cluster_counts(events, None, opts.deidentify)
            .into_iter()
            .map(|c| {
                let mut row = vec![c.cluster, c.count.to_string()];
                row.extend(c.by_label.iter().map(usize::to_string));
                row
            })
            .collect(),
    )?;

    for label in Label::ALL {
        if let Ok(cdf) = duration_cdf::<f64>(events, label) {
            out.cdf(&format!("duration_cdf_{label}.csv"), &cdf)?;
        }
    }

    let chain = preemption_chain(events);
    out.table(
        "chain.csv",
        &["k", "n_k", "ratio_k", "conditional_k"],
        (0..=chain.max_k())
            .map(|k| {
                vec![
                    k.to_string(),
                    chain.n_k(k).to_string(),
                    chain.ratio(k).to_string(),
                    chain.conditional(k).to_string(),
                ]
            })
            .collect(),
    )?;

    let taxonomy = cluster_taxonomy(events, &opts.taxonomy);
    let mut rows = Vec::new();
    for t in &taxonomy {
        let cluster = &names[&t.resource_name];
        if t.preemptions > 0 {
            let cdf = time_to_preemption_cdf::<f64>(events, &t.resource_name)?;
            out.cdf(&format!("ttp_cdf_{}.csv", sanitize_file_component(cluster)), &cdf)?;
        }
        rows.push(vec![
            cluster.clone(),
            t.pilots.to_string(),
            t.terminations.to_string(),
            t.preemptions.to_string(),
            t.preemption_rate().to_string(),
            t.requeue_fraction().to_string(),
            t.class.to_string(),
        ]);
    }
    rows.sort();
    out.table(
        "taxonomy.csv",
        &[
            "cluster",
            "pilots",
            "terminations",
            "preemptions",
            "preemption_rate",
            "requeue_fraction",
            "class",
        ],
        rows,
    )?;

    Ok(StatsOutputs { files: out.files })
}
