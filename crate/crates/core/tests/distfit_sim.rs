use gridscope_core::classify::{classify_events, ClassifyParams, Label, TerminationEvent};
use gridscope_core::distfit::ks::{ks_sorted, sort_samples};
use gridscope_core::distfit::{config_histograms, fit_cluster, Family, FitConfig};
use gridscope_core::simulate::*;
use gridscope_core::timeline::TimelineBuilder;

fn events(cfg: &SimConfig) -> Vec<TerminationEvent> {
    let mut b = TimelineBuilder::new();
    run_simulation(cfg, &mut b).unwrap();
    classify_events(&b.finish(), &ClassifyParams::default())
}

#[test]
fn default_lifetimes_show_up_as_histogram_modes() {
    let mut cfg = scenarios::default_scenario(2);
    cfg.sites[0].pilot_arrival_rate = 20.0;
    let h = config_histograms(&events(&cfg), 0.5);
    let (retire, die) = (h.retire.mode_left_hours().unwrap(), h.die.mode_left_hours().unwrap());
    assert!((retire - 15.0).abs() <= 0.5, "{retire}");
    assert!((die - 23.0).abs() <= 0.5, "{die}");
    assert_eq!(h.retire.peaks(0.2).len(), 1);
}

#[test]
fn two_retire_settings_give_two_peaks() {
    let a = SiteConfig {
        to_retire_offset: 15 * 3600,
        ..SiteConfig::named("A")
    };
    let b = SiteConfig {
        to_retire_offset: 20 * 3600,
        ..SiteConfig::named("B")
    };
    let h = config_histograms(&events(&SimConfig::new(vec![a, b], 2 * 86_400, 4)), 0.5);
    let peaks = h.retire.peaks(0.2);
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    assert!(
        (peaks[0] - 15.0).abs() <= 0.5 && (peaks[1] - 20.0).abs() <= 0.5,
        "{peaks:?}"
    );
}

#[test]
fn class_mixture_tracks_pooled_runtimes() {
    let site = SiteConfig {
        pilot_arrival_rate: 25.0,
        preemption: PreemptionHazard {
            base_rate: 0.04,
            ..Default::default()
        },
        requeue_probability: 0.5,
        payload_supply: 0.8,
        outage: OutageProcess {
            rate: 0.002,
            ..Default::default()
        },
        ..SiteConfig::named("C10")
    };
    let ev = events(&SimConfig::new(vec![site], 4 * 86_400, 10));
    let fits = fit_cluster::<f64>(&ev, Some("C10"), &Label::ALL, &Family::ALL, &FitConfig::default());
    let (labels, mix) = fits.mixture.as_ref().expect("mixture fitted");
    let pooled: Vec<f64> = ev
        .iter()
        .filter(|e| labels.contains(&e.label))
        .map(|e| e.instance_runtime.max(1) as f64)
        .collect();
    assert!(pooled.len() > 2_000);
    let ks = ks_sorted(&sort_samples(&pooled), |x| mix.cdf(x));
    assert!(ks <= 0.05, "mixture KS {ks}");
    let total: f64 = mix.components().iter().map(|c| c.0).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
