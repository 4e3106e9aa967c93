mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{frames_from, presences};
use gridscope_core::classify::*;
use gridscope_core::ingest::{SnapshotFrame, StartdState};
use gridscope_core::timeline::{build_timelines, potential_terminations};
use proptest::prelude::*;

const N: usize = 16;

fn with_states(mut frames: Vec<SnapshotFrame>, states: &[u8], die_shift: i64) -> Vec<SnapshotFrame> {
    let mut i = 0;
    for f in &mut frames {
        for ad in &mut f.ads {
            let s = states[i % states.len()];
            i += 1;
            ad.state = match s % 3 {
                0 => StartdState::Claimed,
                1 => StartdState::Unclaimed,
                _ => StartdState::Retiring,
            };
            ad.to_die = f.frame_time + die_shift + 60 * i64::from(s);
            ad.to_retire = ad.to_die - 3_000;
        }
    }
    frames
}

fn arb_frames() -> impl Strategy<Value = Vec<SnapshotFrame>> {
    (
        presences(6, N),
        prop::collection::vec(any::<u8>(), 1..40),
        -2_000i64..2_000,
    )
        .prop_map(|(p, s, shift)| with_states(frames_from(&p, N), &s, shift))
}

proptest! {
    #[test]
    fn one_event_per_termination_and_per_gap(frames in arb_frames()) {
        let set = build_timelines(&frames);
        let events = classify_events(&set, &ClassifyParams::default());
        let gaps: usize = set.instances().map(|i| i.gaps.len()).sum();
        let terms = potential_terminations(&set).len();
        prop_assert_eq!(events.len(), gaps + terms);
        let non_ni = events.iter().filter(|e| e.label != Label::NetworkIssue).count();
        prop_assert_eq!(non_ni, terms);
        let distinct: BTreeSet<_> = events.iter().map(|e| (e.pilot_key.clone(), e.instance_name.clone(), e.event_time)).collect();
        prop_assert_eq!(distinct.len(), events.len());
    }

    #[test]
    fn network_issues_are_exactly_the_gaps(frames in arb_frames()) {
        let set = build_timelines(&frames);
        let events = classify_events(&set, &ClassifyParams::default());
        let from_gaps: BTreeSet<_> = set
            .instances()
            .flat_map(|i| i.gaps.iter().map(move |g| (i.pilot_key.clone(), i.instance_name.clone(), g.missing_from)))
            .collect();
        let ni: BTreeSet<_> = events
            .iter()
            .filter(|e| e.label == Label::NetworkIssue)
            .map(|e| (e.pilot_key.clone(), e.instance_name.clone(), e.event_time))
            .collect();
        prop_assert_eq!(ni, from_gaps);
    }

    #[test]
    fn wider_kill_tolerance_only_adds_kills(frames in arb_frames(), a in 0i64..3_000, extra in 0i64..3_000) {
        let set = build_timelines(&frames);
        let kills = |tol| -> BTreeSet<_> {
            let params = ClassifyParams { kill_tolerance: tol, ..Default::default() };
            classify_events(&set, &params)
                .into_iter()
                .filter(|e| e.label == Label::Kill)
                .map(|e| (e.pilot_key, e.instance_name, e.event_time))
                .collect()
        };
        let narrow = kills(a);
        let wide = kills(a + extra);
        prop_assert!(narrow.is_subset(&wide));
    }

    #[test]
    fn censoring_flag_follows_lookahead(frames in arb_frames(), lookahead in 0i64..2_000) {
        let set = build_timelines(&frames);
        let end = set.observation_end().unwrap();
        let params = ClassifyParams { lookahead, ..Default::default() };
        for e in classify_events(&set, &params) {
            prop_assert_eq!(e.censored_lookahead, e.event_time + lookahead > end);
        }
    }

    #[test]
    fn summary_fractions_sum_to_one(labels in prop::collection::vec(0usize..5, 1..200)) {
        let events: Vec<_> = labels.iter().enumerate().map(|(i, &l)| event(&i.to_string(), Label::ALL[l])).collect();
        let s = summarize_labels(&events).unwrap();
        let total: f64 = Label::ALL.iter().map(|&l| s.fraction(l)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(Label::ALL.iter().map(|&l| s.count(l)).sum::<usize>(), events.len());
    }

    #[test]
    fn events_csv_round_trip(frames in arb_frames()) {
        let events = classify_events(&build_timelines(&frames), &ClassifyParams::default());
        let mut buf = Vec::new();
        write_events_csv(&events, &mut buf).unwrap();
        prop_assert_eq!(read_events_csv(buf.as_slice()).unwrap(), events);
    }
}

fn event(job: &str, label: Label) -> TerminationEvent {
    TerminationEvent {
        pilot_key: gridscope_core::ingest::PilotKey::new(job, "E"),
        instance_name: format!("{job}-0"),
        resource_name: "R".into(),
        site: "S".into(),
        event_time: 0,
        label,
        instance_runtime: 1,
        to_retire: 0,
        to_die: 0,
        evidence: Evidence::Destructive,
        censored_lookahead: false,
        daemon_start_time: 0,
    }
}

#[test]
fn synthesized_proportions_are_reproduced_exactly() {
    let counts = [
        (Label::Retire, 4864),
        (Label::Kill, 902),
        (Label::IdleShutDown, 1063),
        (Label::Preemption, 3037),
        (Label::NetworkIssue, 134),
    ];
    let mut events = Vec::new();
    for (l, n) in counts {
        for i in 0..n {
            events.push(event(&format!("{l}{i}"), l));
        }
    }
    let s = summarize_labels(&events).unwrap();
    assert_eq!(s.total, 10_000);
    assert_eq!(s.fraction(Label::Retire), 0.4864);
    assert_eq!(s.fraction(Label::Preemption), 0.3037);
    assert_eq!(s.fraction(Label::IdleShutDown), 0.1063);
    assert_eq!(s.fraction(Label::NetworkIssue), 0.0134);
    let by_label: BTreeMap<_, _> = Label::ALL.iter().map(|&l| (l, s.count(l))).collect();
    assert_eq!(by_label[&Label::Kill], 902);
}
