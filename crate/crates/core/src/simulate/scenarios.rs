//! Bundled simulator configurations.

use super::config::*;

/// A single site with the default pilot lifecycle.
pub fn default_scenario(seed: u64) -> SimConfig {
    SimConfig::new(vec![SiteConfig::named("C0")], 3 * 86_400, seed)
}

/// Many short, heavily preempted pilots, each preemption requeued with
/// `requeue_probability`.
pub fn chain_scenario(requeue_probability: f64, arrival_rate: f64, hours: i64, seed: u64) -> SimConfig {
    let site = SiteConfig {
        pilot_arrival_rate: arrival_rate,
        arrival_stop: Some((hours - 12) * 3600),
        preemption: PreemptionHazard {
            base_rate: 1.0,
            ..Default::default()
        },
        requeue_probability,
        payload_supply: 1.0,
        payload_duration: PayloadDuration {
            family: crate::distfit::Family::Uniform,
            params: vec![40.0 * 3600.0, 50.0 * 3600.0],
        },
        ..SiteConfig::named("CHAIN")
    };
    SimConfig::new(vec![site], hours * 3600, seed)
}

/// Every preemption is requeued and each new instance faces a higher hazard,
/// so the share of pilots preempted once more grows with the chain length.
pub fn age_increasing_chain_scenario(arrival_rate: f64, hours: i64, seed: u64) -> SimConfig {
    let site = SiteConfig {
        pilot_arrival_rate: arrival_rate,
        arrival_stop: Some((hours - 24) * 3600),
        preemption: PreemptionHazard {
            base_rate: 0.01,
            repeat_multiplier: 2.0,
            ..Default::default()
        },
        requeue_probability: 0.9,
        payload_supply: 1.0,
        ..SiteConfig::named("AGE")
    };
    SimConfig::new(vec![site], hours * 3600, seed)
}

struct Row {
    name: &'static str,
    rate: f64,
    hazard: f64,
    early: f64,
    diurnal: f64,
    requeue: f64,
    supply: f64,
}

#[rustfmt::skip]
const CALIBRATED_SITES: [Row; 12] = [
    Row { name: "Alder", rate: 14.0, hazard: 0.0, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.7 },
    Row { name: "Birch", rate: 10.0, hazard: 0.0, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.65 },
    Row { name: "Cedar", rate: 8.0, hazard: 0.025, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.75 },
    Row { name: "Dogwood", rate: 7.0, hazard: 0.05, early: 1.0, diurnal: 0.0, requeue: 0.7, supply: 0.75 },
    Row { name: "Elm", rate: 6.0, hazard: 0.01, early: 60.0, diurnal: 0.0, requeue: 0.5, supply: 0.75 },
    Row { name: "Fir", rate: 6.0, hazard: 0.0, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.55 },
    Row { name: "Gum", rate: 5.0, hazard: 0.045, early: 1.0, diurnal: 0.8, requeue: 0.0, supply: 0.75 },
    Row { name: "Hazel", rate: 4.0, hazard: 0.04, early: 1.0, diurnal: 0.0, requeue: 0.7, supply: 0.75 },
    Row { name: "Ironwood", rate: 3.0, hazard: 0.0, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.75 },
    Row { name: "Juniper", rate: 3.0, hazard: 0.02, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.75 },
    Row { name: "Kapok", rate: 2.0, hazard: 0.0, early: 1.0, diurnal: 0.0, requeue: 0.0, supply: 0.45 },
    Row { name: "Larch", rate: 2.0, hazard: 0.15, early: 1.0, diurnal: 0.0, requeue: 0.7, supply: 0.75 },
];

/// Cluster whose preemptions concentrate in the first hour of a pilot's life.
pub const EARLY_BURST_CLUSTER: &str = "Elm";

/// Twelve clusters spanning no-preemption, destructive, requeueing and
/// early-burst policies, calibrated so the classified class mix comes out
/// near 49% Retire, 30% Preemption, 11% IdleShutDown, 9% Kill and 1.3%
/// NetworkIssue.
pub fn calibrated_scenario(seed: u64) -> SimConfig {
    let sites = CALIBRATED_SITES
        .iter()
        .map(|r| SiteConfig {
            pilot_arrival_rate: r.rate,
            preemption: PreemptionHazard {
                base_rate: r.hazard,
                early_multiplier: r.early,
                diurnal_amplitude: r.diurnal,
                ..Default::default()
            },
            requeue_probability: r.requeue,
            payload_supply: r.supply,
            outage: OutageProcess {
                rate: 0.001,
                ..Default::default()
            },
            payload_duration: PayloadDuration {
                family: crate::distfit::Family::Gamma,
                params: vec![1.0, 0.0, 4.6 * 3600.0],
            },
            ..SiteConfig::named(r.name)
        })
        .collect();
    SimConfig::new(sites, 7 * 86_400, seed)
}

/// The calibrated scenario at its reference seed.
pub fn emit_calibrated_scenario() -> SimConfig {
    calibrated_scenario(7)
}
