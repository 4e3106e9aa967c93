//! Markdown summary assembled from the stats and fit tables.

use std::fmt::Write as _;
use std::path::Path;

use super::{PipelineError, DIE_HISTOGRAM_FILE, RETIRE_HISTOGRAM_FILE};
use crate::classify::Label;
use crate::distfit::classes::LOW_CONFIDENCE_SAMPLES;
use crate::simulate::TruthComparison;

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, PipelineError> {
        if !path.exists() {
            return Err(PipelineError::BadInput(format!(
                "missing input table {}",
                path.display()
            )));
        }
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { headers, rows })
    }

    fn col(&self, name: &str) -> Result<usize, PipelineError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::BadInput(format!("table lacks column {name:?}")))
    }
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn pct(s: &str) -> String {
    format!("{:.2}%", 100.0 * num(s))
}

/// `(x, F(x))` steps from a CDF table.
fn cdf_steps(path: &Path) -> Result<Vec<(f64, f64)>, PipelineError> {
    let t = Table::read(path)?;
    Ok(t.rows.iter().map(|r| (num(&r[0]), num(&r[1]))).collect())
}

fn cdf_at(steps: &[(f64, f64)], x: f64) -> f64 {
    steps.iter().take_while(|s| s.0 <= x).last().map_or(0.0, |s| s.1)
}

fn cdf_median(steps: &[(f64, f64)]) -> f64 {
    steps.iter().find(|s| s.1 >= 0.5).map_or(f64::NAN, |s| s.0)
}

fn markdown_table(out: &mut String, headers: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", headers.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(headers.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

pub fn render_report(stats: &Path, fits: &Path, validation: Option<&TruthComparison>) -> Result<String, PipelineError> {
    let mut md = String::from("# Pilot termination report\n\n");

    let mix = Table::read(&stats.join("class_mix.csv"))?;
    let total: usize = mix.rows.iter().map(|r| r[1].parse::<usize>().unwrap_or(0)).sum();
    let _ = writeln!(md, "## Class mix\n\n{total} termination events.\n");
    markdown_table(
        &mut md,
        &["Class", "Events", "Share"],
        mix.rows.iter().map(|r| vec![r[0].clone(), r[1].clone(), pct(&r[2])]),
    );

    if let Some(v) = validation {
        md.push_str("## Validation against simulator truth\n\n");
        let _ = writeln!(
            md,
            "{} of {} events outside the lookahead boundary match their true label ({:.2}%); {} events and {} truth records were unpaired.\n",
            v.matched,
            v.compared,
            100.0 * v.accuracy(),
            v.unmatched_events,
            v.unmatched_truth
        );
        let mut headers = vec!["True \\ Classified"];
        headers.extend(Label::ALL.iter().map(|l| l.as_str()));
        markdown_table(
            &mut md,
            &headers,
            Label::ALL.iter().map(|t| {
                let mut row = vec![t.to_string()];
                row.extend(v.confusion[t.index()].iter().map(usize::to_string));
                row
            }),
        );
    }

    let bins = Table::read(&stats.join("events_over_time.csv"))?;
    let _ = writeln!(md, "## Events over time\n\n{} bins.\n", bins.rows.len());
    let mut peak_rows = Vec::new();
    for l in Label::ALL {
        let c = bins.col(l.as_str())?;
        if let Some(best) = bins.rows.iter().max_by_key(|r| {
            (
                r[c].parse::<usize>().unwrap_or(0),
                std::cmp::Reverse(r[1].parse::<usize>().unwrap_or(0)),
            )
        }) {
            peak_rows.push(vec![l.to_string(), best[0].clone(), best[c].clone()]);
        }
    }
    markdown_table(&mut md, &["Class", "Busiest bin start", "Events in it"], peak_rows);

    let clusters = Table::read(&stats.join("cluster_counts.csv"))?;
    let _ = writeln!(
        md,
        "## Clusters\n\n{} clusters. Top ten by events:\n",
        clusters.rows.len()
    );
    markdown_table(
        &mut md,
        &["Cluster", "Events"],
        clusters.rows.iter().take(10).map(|r| vec![r[0].clone(), r[1].clone()]),
    );
    let pc = clusters.col("Preemption")?;
    let mut by_preempt: Vec<&Vec<String>> = clusters.rows.iter().filter(|r| num(&r[pc]) > 0.0).collect();
    by_preempt.sort_by(|a, b| num(&b[pc]).total_cmp(&num(&a[pc])).then_with(|| a[0].cmp(&b[0])));
    md.push_str("Top ten by preemptions:\n\n");
    markdown_table(
        &mut md,
        &["Cluster", "Preemptions"],
        by_preempt.iter().take(10).map(|r| vec![r[0].clone(), r[pc].clone()]),
    );

    md.push_str("## Runtime by class\n\n");
    let mut rows = Vec::new();
    for l in Label::ALL {
        let path = stats.join(format!("duration_cdf_{l}.csv"));
        if path.exists() {
            let s = cdf_steps(&path)?;
            rows.push(vec![
                l.to_string(),
                format!("{:.2}", cdf_median(&s) / 3600.0),
                format!("{:.3}", cdf_at(&s, 3600.0)),
                format!("{:.3}", cdf_at(&s, 15.0 * 3600.0)),
            ]);
        }
    }
    markdown_table(&mut md, &["Class", "Median (h)", "F(1 h)", "F(15 h)"], rows);

    let chain = Table::read(&stats.join("chain.csv"))?;
    md.push_str("## Repeated preemption\n\n");
    markdown_table(
        &mut md,
        &[
            "k",
            "Pilots preempted at least k times",
            "Share of pilots",
            "Preempted again",
        ],
        chain
            .rows
            .iter()
            .skip(1)
            .map(|r| vec![r[0].clone(), r[1].clone(), pct(&r[2]), pct(&r[3])]),
    );

    let tax = Table::read(&stats.join("taxonomy.csv"))?;
    md.push_str("## Cluster preemption policy\n\n");
    let mut rows = Vec::new();
    for r in &tax.rows {
        let ttp = stats.join(format!("ttp_cdf_{}.csv", crate::stats::sanitize_file_component(&r[0])));
        let f1h = if ttp.exists() {
            format!("{:.3}", cdf_at(&cdf_steps(&ttp)?, 3600.0))
        } else {
            "-".into()
        };
        rows.push(vec![
            r[0].clone(),
            r[1].clone(),
            r[3].clone(),
            pct(&r[4]),
            pct(&r[5]),
            f1h,
            r[6].clone(),
        ]);
    }
    markdown_table(
        &mut md,
        &[
            "Cluster",
            "Pilots",
            "Preemptions",
            "Preemption rate",
            "Requeued",
            "Preempted within 1 h",
            "Class",
        ],
        rows,
    );

    md.push_str("## Configured lifetimes\n\n");
    for (name, file) in [
        ("Retire offset", RETIRE_HISTOGRAM_FILE),
        ("Die offset", DIE_HISTOGRAM_FILE),
    ] {
        let h = Table::read(&fits.join(file))?;
        let mode = h.rows.iter().max_by(|a, b| {
            num(&a[1])
                .total_cmp(&num(&b[1]))
                .then_with(|| num(&b[0]).total_cmp(&num(&a[0])))
        });
        match mode {
            Some(m) => {
                let _ = writeln!(
                    md,
                    "- {name}: most pilots in the bin starting at {} h ({} pilots).",
                    m[0], m[1]
                );
            }
            None => {
                let _ = writeln!(md, "- {name}: no data.");
            }
        }
    }
    md.push('\n');

    let fit_table = Table::read(&fits.join("fits.csv"))?;
    md.push_str("## Runtime distribution fits\n\nBest family per cluster and class, ranked by KS statistic.\n\n");
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for r in &fit_table.rows {
        if seen.insert((r[0].clone(), r[1].clone())) {
            let n: usize = r[6].parse().unwrap_or(0);
            let note = if n < LOW_CONFIDENCE_SAMPLES {
                "low confidence"
            } else {
                ""
            };
            rows.push(vec![
                r[0].clone(),
                r[1].clone(),
                r[2].clone(),
                format!("{:.4}", num(&r[5])),
                r[6].clone(),
                note.to_string(),
            ]);
        }
    }
    markdown_table(&mut md, &["Cluster", "Class", "Family", "KS", "n", "Note"], rows);

    let mix = Table::read(&fits.join("mixture.csv"))?;
    if !mix.rows.is_empty() {
        md.push_str("## Overall runtime mixture\n\n");
        markdown_table(
            &mut md,
            &["Cluster", "Class", "Weight", "Family", "Parameters"],
            mix.rows.iter().map(|r| {
                vec![
                    r[0].clone(),
                    r[1].clone(),
                    format!("{:.4}", num(&r[2])),
                    r[3].clone(),
                    r[4].clone(),
                ]
            }),
        );
    }
    Ok(md)
}
