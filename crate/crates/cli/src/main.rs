use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gridscope_core::classify::{ClassifyParams, Label};
use gridscope_core::distfit::Family;
use gridscope_core::ingest::IngestOptions;
use gridscope_core::pipeline::{self, FitOptions, PipelineOptions};
use gridscope_core::simulate::{read_truth_csv, score_against_truth, SimConfig};
use gridscope_core::stats::StatsOptions;

#[derive(Parser)]
#[command(name = "gridscope", version, about = "Pilot job termination analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate snapshot files and ground truth from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rebuild instance timelines from snapshots and label every termination.
    Classify {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_name = "SECONDS")]
        kill_tolerance: Option<i64>,
        #[arg(long, value_name = "SECONDS")]
        idle_timeout: Option<i64>,
        #[arg(long, value_name = "SECONDS")]
        lookahead: Option<i64>,
        /// Fail on the first malformed line instead of quarantining it.
        #[arg(long)]
        strict: bool,
    },
    /// Aggregate tables over a termination events file.
    Stats {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace cluster names with C1, C2, ... by event count.
        #[arg(long)]
        deidentify: bool,
        #[arg(long, value_name = "SECONDS", default_value_t = 3600)]
        bin_width: i64,
    },
    /// Fit runtime distributions per class.
    Fit {
        #[arg(long)]
        events: PathBuf,
        /// Comma-separated resource names, or `all` to pool every cluster.
        #[arg(long, default_value = "all")]
        cluster: String,
        /// Comma-separated class names, or `all`.
        #[arg(long, default_value = "all")]
        labels: String,
        /// Comma-separated family names, or `all`.
        #[arg(long, default_value = "all")]
        families: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a markdown summary of stats and fit outputs.
    Report {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Simulator truth to score the events against.
        #[arg(long, requires = "events")]
        truth: Option<PathBuf>,
        #[arg(long, requires = "truth")]
        events: Option<PathBuf>,
    },
    /// Run every stage from one config and one seed.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "gridscope_run")]
        out: PathBuf,
        /// Feed frames straight to the classifier without writing snapshot files.
        #[arg(long)]
        skip_snapshots: bool,
    },
}

fn list<T>(arg: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr + Clone,
    T::Err: std::fmt::Display,
{
    if arg.eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("{s:?}: {e}")))
        .collect()
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<SimConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = SimConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config, out, seed } => {
            let cfg = load_config(&config, seed)?;
            let outcome = pipeline::simulate_stage(&cfg, &out, &display(&config))?;
            let s = outcome.summary;
            log::info!(
                "{} pilot jobs, {} instances ({} observed), {} frames, {} ads",
                s.pilot_jobs,
                s.instances,
                s.observed_instances,
                s.frames,
                s.ads
            );
        }
        Command::Classify {
            snapshots,
            out,
            kill_tolerance,
            idle_timeout,
            lookahead,
            strict,
        } => {
            let mut params = ClassifyParams::default();
            if let Some(v) = kill_tolerance {
                params.kill_tolerance = v;
            }
            if let Some(v) = idle_timeout {
                params.idle_timeout = v;
            }
            if let Some(v) = lookahead {
                params.lookahead = v;
            }
            let ingest = IngestOptions {
                strict,
                ..IngestOptions::default()
            };
            let (_, o) = pipeline::classify_stage(&snapshots, &out, &params, &ingest, &display(&snapshots))?;
            if o.malformed_lines > 0 {
                log::warn!("{} malformed lines quarantined", o.malformed_lines);
            }
            log::info!("{} frames, {} ads, {} events", o.frames, o.ads, o.events);
        }
        Command::Stats {
            events,
            out,
            deidentify,
            bin_width,
        } => {
            let ev = pipeline::read_events(&events)?;
            let opts = StatsOptions {
                bin_width,
                deidentify,
                ..StatsOptions::default()
            };
            let written = pipeline::stats_stage(&ev, &out, &opts, &display(&events))?;
            log::info!("{} tables written", written.files.len());
        }
        Command::Fit {
            events,
            cluster,
            labels,
            families,
            out,
            seed,
        } => {
            let ev = pipeline::read_events(&events)?;
            let clusters = if cluster.eq_ignore_ascii_case("all") {
                vec![None]
            } else {
                cluster.split(',').map(|c| Some(c.trim().to_string())).collect()
            };
            let mut opts = FitOptions {
                clusters,
                labels: list(&labels, &Label::ALL)?,
                families: list(&families, &Family::ALL)?,
                ..FitOptions::default()
            };
            if opts.labels.is_empty() || opts.families.is_empty() {
                bail!(pipeline::PipelineError::BadInput("empty --labels or --families".into()));
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            pipeline::fit_stage(&ev, &out, &opts, &display(&events))?;
        }
        Command::Report {
            stats,
            fits,
            out,
            truth,
            events,
        } => {
            let validation = match (truth, events) {
                (Some(t), Some(e)) => {
                    let f = fs::File::open(&t).with_context(|| format!("reading {}", t.display()))?;
                    let truth = read_truth_csv(f)?;
                    Some(score_against_truth(&pipeline::read_events(&e)?, &truth, true))
                }
                _ => None,
            };
            pipeline::report_stage(
                &stats,
                &fits,
                &out,
                validation.as_ref(),
                (&display(&stats), &display(&fits)),
            )?;
        }
        Command::Pipeline {
            config,
            seed,
            out,
            skip_snapshots,
        } => {
            let cfg = load_config(&config, seed)?;
            let mut opts = PipelineOptions {
                write_snapshots: !skip_snapshots,
                ..PipelineOptions::default()
            };
            opts.fit.seed = cfg.seed;
            let summary = pipeline::run_pipeline(&cfg, &out, &opts, &display(&config))?;
            log::info!(
                "{} events, accuracy {:.4} over {} uncensored",
                summary.events.len(),
                summary.validation.accuracy(),
                summary.validation.compared
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDSCOPE_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
