//! Simulates a bundled scenario in memory and prints the classifier's view of it.
//!
//! `cargo run --release --example scenario_summary -- [mixed|chain|age]`

use std::time::Instant;

use gridscope_core::classify::{classify_events, summarize_labels, ClassifyParams, Label};
use gridscope_core::simulate::{run_simulation, scenarios, score_against_truth};
use gridscope_core::stats::{preemption_chain, time_to_preemption_cdf};
use gridscope_core::timeline::TimelineBuilder;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "mixed".into());
    let cfg = match which.as_str() {
        "chain" => scenarios::chain_scenario(0.4, 2000.0, 62, 1),
        "age" => scenarios::age_increasing_chain_scenario(500.0, 96, 1),
        _ => scenarios::emit_calibrated_scenario(),
    };
    let t0 = Instant::now();
    let mut b = TimelineBuilder::new();
    let out = run_simulation(&cfg, &mut b).unwrap();
    let set = b.finish();
    let t1 = t0.elapsed();
    let events = classify_events(&set, &ClassifyParams::default());
    println!(
        "{:?}\nsimulate+timeline {:?}, total {:?}",
        out.summary,
        t1,
        t0.elapsed()
    );
    let s = summarize_labels(&events).unwrap();
    for l in Label::ALL {
        println!("{l:>14} {:6} {:.4}", s.count(l), s.fraction(l));
    }
    println!(
        "pilots {} instances {} events {} truth {}",
        s.distinct_pilots,
        s.distinct_instances,
        events.len(),
        out.truth.len()
    );
    let c = score_against_truth(&events, &out.truth, true);
    println!(
        "accuracy {:.4} over {} uncensored events ({} events, {} truth rows unpaired)",
        c.accuracy(),
        c.compared,
        c.unmatched_events,
        c.unmatched_truth
    );
    for l in Label::ALL {
        println!("true {l:>14}: {:?}", c.confusion[l.index()]);
    }
    let ch = preemption_chain(&events);
    for k in 1..=ch.max_k().min(6) {
        println!(
            "k={k} n={} ratio={:.4} cond={:.4}",
            ch.n_k(k),
            ch.ratio(k),
            ch.conditional(k)
        );
    }
    if let Ok(f) = time_to_preemption_cdf::<f64>(&events, scenarios::EARLY_BURST_CLUSTER) {
        println!("early cluster F(1h) = {:.4} (n={})", f.eval(3600.0), f.len());
    }
}
