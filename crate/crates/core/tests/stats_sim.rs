use std::collections::HashMap;

use gridscope_core::classify::{classify_events, ClassifyParams, Label, TerminationEvent};
use gridscope_core::distfit::Family;
use gridscope_core::simulate::*;
use gridscope_core::stats::*;
use gridscope_core::timeline::TimelineBuilder;

fn run(cfg: &SimConfig) -> (Vec<TruthRecord>, Vec<TerminationEvent>) {
    let mut b = TimelineBuilder::new();
    let out = run_simulation(cfg, &mut b).unwrap();
    (out.truth, classify_events(&b.finish(), &ClassifyParams::default()))
}

fn site(name: &str, rate: f64) -> SiteConfig {
    SiteConfig {
        pilot_arrival_rate: rate,
        ..SiteConfig::named(name)
    }
}

#[test]
fn outage_burst_spikes_network_issues_in_its_bin() {
    let mut cfg = SimConfig::new(vec![site("A", 20.0)], 2 * 86_400, 21);
    cfg.outage_bursts = vec![OutageBurst {
        at: 30 * 3600 + 600,
        width: 900,
        probability: 0.8,
        duration_min: 600,
        duration_max: 900,
    }];
    let (_, events) = run(&cfg);
    let bins = events_over_time(&events, 3600, Some(cfg.start_time)).unwrap();
    let ni = bins.label_series(Label::NetworkIssue);
    let peak = (0..ni.len()).max_by_key(|&i| ni[i]).unwrap();
    assert_eq!(peak, 30);
    let rest: usize = ni.iter().enumerate().filter(|&(i, _)| i != 30).map(|(_, c)| c).sum();
    assert!(ni[30] > 50 && rest * 10 < ni[30], "{ni:?}");
}

#[test]
fn many_cluster_ranking_matches_truth() {
    let sites: Vec<_> = (0..56)
        .map(|i| site(&format!("K{i:02}"), 0.5 + 0.1 * i as f64))
        .collect();
    let cfg = SimConfig::new(sites, 36 * 3600, 5);
    let (truth, events) = run(&cfg);
    let mut want: HashMap<String, usize> = HashMap::new();
    for t in &truth {
        let cluster = t.pilot_key.entry_name.trim_start_matches("ENTRY_").to_string();
        *want.entry(cluster).or_default() += 1;
    }
    let got = per_cluster_counts(&events, None, false);
    assert_eq!(got.len(), want.len());
    for c in &got {
        assert_eq!(c.count, want[&c.resource_name], "{}", c.resource_name);
    }
    assert!(got.windows(2).all(|w| w[0].count >= w[1].count));
    let deid = per_cluster_counts(&events, None, true);
    for (i, c) in deid.iter().enumerate() {
        assert_eq!(c.cluster, format!("C{i}"));
        assert_eq!(c.count, got[i].count);
    }
    assert_eq!(deid[0].resource_name, "K55");
}

#[test]
fn kill_runtimes_step_at_the_configured_lifetime() {
    let mut s = site("A", 10.0);
    s.payload_supply = 1.0;
    s.payload_duration = PayloadDuration {
        family: Family::Uniform,
        params: vec![100.0 * 3600.0, 200.0 * 3600.0],
    };
    let (_, events) = run(&SimConfig::new(vec![s], 3 * 86_400, 8));
    let cdf = duration_cdf::<f64>(&events, Label::Kill).unwrap();
    assert!(cdf.len() > 100);
    let h = 3600.0;
    assert_eq!(cdf.eval(22.4 * h), 0.0);
    assert_eq!(cdf.eval(23.5 * h), 1.0);
    let median = cdf.quantile(0.5).unwrap();
    assert!((median - 23.0 * h).abs() < 0.2 * h, "{median}");
}

#[test]
fn taxonomy_recovers_configured_policies() {
    let mut requeue = site("Requeuer", 12.0);
    requeue.preemption.base_rate = 0.3;
    requeue.requeue_probability = 0.9;
    let mut destroy = site("Destroyer", 12.0);
    destroy.preemption.base_rate = 0.3;
    let calm = site("Calm", 12.0);
    let (_, events) = run(&SimConfig::new(vec![requeue, destroy, calm], 2 * 86_400, 13));
    let tax: HashMap<_, _> = cluster_taxonomy(&events, &TaxonomyThresholds::default())
        .into_iter()
        .map(|t| (t.resource_name.clone(), t))
        .collect();
    assert_eq!(tax["Requeuer"].class, ClusterClass::Requeue);
    assert_eq!(tax["Destroyer"].class, ClusterClass::Destructive);
    assert_eq!(tax["Calm"].class, ClusterClass::NoPreempt);
    assert!(tax["Requeuer"].requeue_fraction() > 0.8);
    assert_eq!(tax["Destroyer"].requeued_preemptions, 0);
}

#[test]
fn first_hour_hazard_concentrates_preemptions_early() {
    let mut s = site("Early", 30.0);
    s.preemption.base_rate = 0.02;
    s.preemption.early_multiplier = 100.0;
    let (_, events) = run(&SimConfig::new(vec![s], 2 * 86_400, 17));
    let cdf = time_to_preemption_cdf::<f64>(&events, "Early").unwrap();
    assert!(cdf.len() > 500);
    assert!(cdf.eval(3600.0) >= 0.8, "{}", cdf.eval(3600.0));
}

fn ev(job: usize, cluster: &str, label: Label) -> TerminationEvent {
    TerminationEvent {
        pilot_key: gridscope_core::ingest::PilotKey::new(job.to_string(), "E"),
        instance_name: format!("n{job}"),
        resource_name: cluster.into(),
        site: cluster.into(),
        event_time: 10,
        label,
        instance_runtime: 100,
        to_retire: 0,
        to_die: 0,
        evidence: gridscope_core::classify::Evidence::Destructive,
        censored_lookahead: false,
        daemon_start_time: 0,
    }
}

#[test]
fn preemption_ranking_can_differ_from_overall_ranking() {
    let mut events = Vec::new();
    events.extend((0..5).map(|i| ev(i, "A", Label::Retire)));
    events.push(ev(5, "A", Label::Preemption));
    events.extend((6..9).map(|i| ev(i, "B", Label::Preemption)));
    let all = per_cluster_counts(&events, None, true);
    let pre = per_cluster_counts(&events, Some(Label::Preemption), true);
    assert_eq!(all.iter().map(|c| c.cluster.as_str()).collect::<Vec<_>>(), ["C0", "C1"]);
    assert_eq!(pre.iter().map(|c| c.cluster.as_str()).collect::<Vec<_>>(), ["C1", "C0"]);
    assert_eq!(pre[0].resource_name, "B");
}

#[test]
fn stats_directory_has_one_cdf_per_preempting_cluster() {
    let mut a = site("A", 8.0);
    a.preemption.base_rate = 0.2;
    let (_, events) = run(&SimConfig::new(vec![a, site("B", 8.0)], 86_400 + 3600, 3));
    let dir = tempfile::tempdir().unwrap();
    write_stats_dir(dir.path(), &events, &StatsOptions::default()).unwrap();
    assert!(dir.path().join("ttp_cdf_A.csv").exists());
    assert!(!dir.path().join("ttp_cdf_B.csv").exists());
    let mix = std::fs::read_to_string(dir.path().join("class_mix.csv")).unwrap();
    assert_eq!(mix.lines().count(), 6);
}
