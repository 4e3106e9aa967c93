//! Fitting runtime distributions of classified events, and the CSV tables
//! produced by the `fit` stage.

use std::collections::BTreeMap;
use std::io::Write;

use super::{
    overall_mixture, select_best_with, DistError, DistributionFit, Family, FitConfig, MixtureModel, MIN_FIT_SAMPLES,
};
use crate::classify::{Label, TerminationEvent};
use crate::Scalar;

/// Fits below this many samples are reported as low confidence.
pub const LOW_CONFIDENCE_SAMPLES: usize = 200;

/// Counts in fixed-width bins of hours, starting at `first_bin * bin_width_hours`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width_hours: f64,
    pub first_bin: i64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn from_hours(values: impl IntoIterator<Item = f64>, bin_width_hours: f64) -> Self {
        let idx: Vec<i64> = values
            .into_iter()
            .filter(|v| v.is_finite())
            .map(|v| (v / bin_width_hours).floor() as i64)
            .collect();
        let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
            return Self {
                bin_width_hours,
                first_bin: 0,
                counts: Vec::new(),
            };
        };
        let mut counts = vec![0usize; (hi - lo + 1) as usize];
        for i in idx {
            counts[(i - lo) as usize] += 1;
        }
        Self {
            bin_width_hours,
            first_bin: lo,
            counts,
        }
    }

    pub fn bin_left(&self, i: usize) -> f64 {
        (self.first_bin + i as i64) as f64 * self.bin_width_hours
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.bin_left(i), c))
    }

    /// Left edge of the fullest bin (earliest on ties).
    pub fn mode_left_hours(&self) -> Option<f64> {
        let (i, _) = self
            .counts
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, usize)>, (i, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((i, c)),
            })?;
        Some(self.bin_left(i))
    }

    /// Bins whose count is a strict local maximum and at least `min_share` of the total.
    pub fn peaks(&self, min_share: f64) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        let c = &self.counts;
        (0..c.len())
            .filter(|&i| {
                let left = if i == 0 { 0 } else { c[i - 1] };
                let right = c.get(i + 1).copied().unwrap_or(0);
                c[i] > left && c[i] >= right && c[i] as f64 >= min_share * total as f64
            })
            .map(|i| self.bin_left(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigHistograms {
    /// `to_retire - daemon_start_time`, hours.
    pub retire: Histogram,
    /// `to_die - daemon_start_time`, hours.
    pub die: Histogram,
}

/// Histograms of the configured retire and die offsets, one value per
/// terminated instance (reappearance events are skipped).
pub fn config_histograms(events: &[TerminationEvent], bin_width_hours: f64) -> ConfigHistograms {
    let ends = || events.iter().filter(|e| e.label != Label::NetworkIssue);
    let hours = |t: i64| t as f64 / 3600.0;
    ConfigHistograms {
        retire: Histogram::from_hours(
            ends().map(|e| hours(e.to_retire - e.daemon_start_time)),
            bin_width_hours,
        ),
        die: Histogram::from_hours(ends().map(|e| hours(e.to_die - e.daemon_start_time)), bin_width_hours),
    }
}

/// Instance runtimes of `label` events, clamped to at least one second.
pub fn runtimes<S: Scalar>(events: &[&TerminationEvent], label: Label) -> Vec<S> {
    events
        .iter()
        .filter(|e| e.label == label)
        .map(|e| S::lit(e.instance_runtime.max(1) as f64))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LabelFits<S> {
    pub label: Label,
    pub sample_count: usize,
    /// Ranked best first; empty when fitting was impossible.
    pub ranked: Vec<DistributionFit<S>>,
    pub error: Option<DistError>,
}

impl<S: Scalar> LabelFits<S> {
    pub fn best(&self) -> Option<&DistributionFit<S>> {
        self.ranked.first()
    }

    pub fn low_confidence(&self) -> bool {
        self.sample_count < LOW_CONFIDENCE_SAMPLES
    }
}

#[derive(Debug, Clone)]
pub struct ClusterFits<S> {
    /// Resource name, or `all` for the pooled fit.
    pub cluster: String,
    pub labels: Vec<LabelFits<S>>,
    /// Mixture of the best fits, weighted by label frequency among fitted labels.
    pub mixture: Option<(Vec<Label>, MixtureModel<S>)>,
}

/// Fits every requested label of the events on `cluster` (all clusters when `None`).
pub fn fit_cluster<S: Scalar>(
    events: &[TerminationEvent],
    cluster: Option<&str>,
    labels: &[Label],
    families: &[Family],
    cfg: &FitConfig<S>,
) -> ClusterFits<S> {
    let selected: Vec<&TerminationEvent> = events
        .iter()
        .filter(|e| cluster.is_none_or(|c| e.resource_name == c))
        .collect();
    let mut out = Vec::new();
    for &label in labels {
        let xs = runtimes::<S>(&selected, label);
        let n = xs.len();
        let (ranked, error) = if n < MIN_FIT_SAMPLES {
            (
                Vec::new(),
                Some(DistError::TooFewSamples {
                    got: n,
                    need: MIN_FIT_SAMPLES,
                }),
            )
        } else {
            match select_best_with(&xs, families, cfg) {
                Ok(r) => (r, None),
                Err(e) => (Vec::new(), Some(e)),
            }
        };
        if let Some(e) = &error {
            log::info!("{} {label}: not fitted ({e})", cluster.unwrap_or("all"));
        }
        out.push(LabelFits {
            label,
            sample_count: n,
            ranked,
            error,
        });
    }

    let fitted: Vec<&LabelFits<S>> = out.iter().filter(|l| l.best().is_some()).collect();
    let total: usize = fitted.iter().map(|l| l.sample_count).sum();
    let mixture = (total > 0)
        .then(|| {
            let fits: Vec<DistributionFit<S>> = fitted.iter().map(|l| l.best().unwrap().clone()).collect();
            let weights: Vec<S> = fitted
                .iter()
                .map(|l| S::from_count(l.sample_count) / S::from_count(total))
                .collect();
            overall_mixture(&fits, &weights)
                .ok()
                .map(|m| (fitted.iter().map(|l| l.label).collect(), m))
        })
        .flatten();

    ClusterFits {
        cluster: cluster.unwrap_or("all").to_string(),
        labels: out,
        mixture,
    }
}

fn join_params<S: Scalar>(p: &[S]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
}

/// `cluster,label,family,params,log_likelihood,ks,n`, fits in ranked order.
pub fn write_fits_csv<S: Scalar, W: Write>(fits: &[ClusterFits<S>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cluster", "label", "family", "params", "log_likelihood", "ks", "n"])?;
    for c in fits {
        for l in &c.labels {
            for f in &l.ranked {
                w.write_record([
                    c.cluster.clone(),
                    l.label.to_string(),
                    f.family.to_string(),
                    join_params(&f.params),
                    f.log_likelihood.to_string(),
                    f.ks_statistic.to_string(),
                    f.sample_count.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `cluster,label,weight,family,params`, one row per mixture component.
pub fn write_mixture_csv<S: Scalar, W: Write>(fits: &[ClusterFits<S>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cluster", "label", "weight", "family", "params"])?;
    for c in fits {
        if let Some((labels, m)) = &c.mixture {
            for (label, (weight, fit)) in labels.iter().zip(m.components()) {
                w.write_record([
                    c.cluster.clone(),
                    label.to_string(),
                    weight.to_string(),
                    fit.family.to_string(),
                    join_params(&fit.params),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(h: &Histogram, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_left_hours", "count"])?;
    for (left, count) in h.bins() {
        w.write_record([left.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-label sample counts, for reporting which labels were skipped.
pub fn label_counts(events: &[TerminationEvent], cluster: Option<&str>) -> BTreeMap<Label, usize> {
    let mut m = BTreeMap::new();
    for e in events.iter().filter(|e| cluster.is_none_or(|c| e.resource_name == c)) {
        *m.entry(e.label).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::test_support::event;

    fn with_offsets(retire_h: f64, die_h: f64) -> TerminationEvent {
        let mut e = event("1", "A", Label::Retire, 100_000, 50);
        e.daemon_start_time = 0;
        e.to_retire = (retire_h * 3600.0) as i64;
        e.to_die = (die_h * 3600.0) as i64;
        e
    }

    #[test]
    fn single_spike() {
        let ev: Vec<_> = (0..10).map(|_| with_offsets(15.0, 23.0)).collect();
        let h = config_histograms(&ev, 0.5);
        assert_eq!(h.retire.counts, vec![10]);
        assert_eq!(h.retire.mode_left_hours(), Some(15.0));
        assert_eq!(h.die.mode_left_hours(), Some(23.0));
    }

    #[test]
    fn two_spikes() {
        let ev: Vec<_> = (0..10)
            .map(|i| with_offsets(if i % 2 == 0 { 15.0 } else { 20.0 }, 23.0))
            .collect();
        let h = config_histograms(&ev, 0.5);
        assert_eq!(h.retire.peaks(0.1), vec![15.0, 20.0]);
        let mut buf = Vec::new();
        write_histogram_csv(&h.retire, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_left_hours,count\n15,5\n15.5,0\n"));
    }

    #[test]
    fn small_labels_are_skipped() {
        let mut ev: Vec<_> = (0..40)
            .map(|i| event("1", "A", Label::Retire, 0, 1000 + 37 * i))
            .collect();
        ev.push(event("2", "A", Label::Kill, 0, 5));
        let fits = fit_cluster::<f64>(
            &ev,
            None,
            &[Label::Retire, Label::Kill],
            &[Family::Normal, Family::Uniform],
            &FitConfig::default(),
        );
        assert_eq!(fits.cluster, "all");
        assert_eq!(fits.labels[0].ranked.len(), 2);
        assert!(fits.labels[0].low_confidence());
        assert!(matches!(
            fits.labels[1].error,
            Some(DistError::TooFewSamples { got: 1, .. })
        ));
        let (labels, m) = fits.mixture.as_ref().unwrap();
        assert_eq!(labels, &vec![Label::Retire]);
        assert_eq!(m.components()[0].0, 1.0);
        let mut buf = Vec::new();
        write_fits_csv(&[fits], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("all,Retire,"));
    }
}
