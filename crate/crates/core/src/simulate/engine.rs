//! Lifecycle of one pilot job: its instances, their ads and outages.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::classify::Label;
use crate::distfit::Model;

use super::config::{OutageBurst, SimConfig, SiteConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PilotState {
    Idle,
    Busy,
    Retiring,
}

/// An advertisement as sent by the pilot.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AdRec {
    pub t: i64,
    pub state: PilotState,
    pub payload_start: i64,
}

#[derive(Debug, Clone)]
pub(crate) struct InstanceLife {
    pub site: u32,
    pub job: u32,
    pub name: String,
    pub start: i64,
    pub to_retire: i64,
    pub to_die: i64,
    /// Death time and cause; `None` when still alive at the horizon.
    pub end: Option<(i64, Label)>,
    /// Ads that reached the collector (none are sent during outages).
    pub ads: Vec<AdRec>,
    /// Sorted, non-overlapping `[start, end)` outage windows.
    pub outages: Vec<(i64, i64)>,
}

impl InstanceLife {
    pub fn outage_at(&self, t: i64) -> Option<(i64, i64)> {
        let i = self.outages.partition_point(|o| o.1 <= t);
        self.outages.get(i).copied().filter(|o| o.0 <= t)
    }
}

pub(crate) fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn uniform_i64(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> i64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

pub(crate) struct JobContext<'a> {
    pub cfg: &'a SimConfig,
    pub site: &'a SiteConfig,
    pub site_index: u32,
    pub payload: &'a Model<f64>,
    /// Time of the last snapshot; nothing after it is simulated.
    pub horizon: i64,
}

/// Simulates every instance of one pilot job submitted at `arrival`.
pub(crate) fn simulate_job(ctx: &JobContext, job: u32, arrival: i64, rng: &mut ChaCha8Rng) -> Vec<InstanceLife> {
    let mut out = Vec::new();
    let mut start = arrival;
    let mut k = 0u32;
    while start <= ctx.horizon {
        let life = simulate_instance(ctx, job, k, start, rng);
        let requeue = match life.end {
            Some((t, Label::Preemption)) => {
                let allowed = ctx.site.max_requeues.is_none_or(|m| k < m);
                let draw = rng.random::<f64>();
                (allowed && draw < ctx.site.requeue_probability)
                    .then(|| t + uniform_i64(rng, ctx.site.requeue_delay_min, ctx.site.requeue_delay_max))
            }
            _ => None,
        };
        out.push(life);
        match requeue {
            Some(next) => {
                start = next;
                k += 1;
            }
            None => break,
        }
    }
    out
}

fn jittered(rng: &mut ChaCha8Rng, offset: i64, jitter: f64) -> i64 {
    let f = 1.0 + jitter * (2.0 * rng.random::<f64>() - 1.0);
    (offset as f64 * f).round() as i64
}

fn sample_preemption(ctx: &JobContext, k: u32, start: i64, limit: i64, rng: &mut ChaCha8Rng) -> Option<i64> {
    let hz = &ctx.site.preemption;
    let bound = hz.rate_bound(k);
    if bound <= 0.0 {
        return None;
    }
    let mut t = start as f64;
    loop {
        t += exp_sample(rng, bound);
        if t >= limit as f64 {
            return None;
        }
        let ti = (t.ceil() as i64).max(start + 1);
        if rng.random::<f64>() * bound <= hz.rate_at(ti - start, ti, k) {
            return Some(ti);
        }
    }
}

fn sample_outages(ctx: &JobContext, start: i64, limit: i64, rng: &mut ChaCha8Rng) -> Vec<(i64, i64)> {
    let op = &ctx.site.outage;
    let mut raw = Vec::new();
    if op.rate > 0.0 {
        let rate = op.rate / 3600.0;
        let mut t = start as f64;
        loop {
            t += exp_sample(rng, rate);
            if t >= limit as f64 {
                break;
            }
            let s = (t.ceil() as i64).max(start + 1);
            let d = uniform_i64(rng, op.duration_min, op.duration_max);
            raw.push((s, s + d));
            t = (s + d) as f64;
        }
    }
    for b in &ctx.cfg.outage_bursts {
        burst_outage(ctx.cfg.start_time, b, start, limit, rng, &mut raw);
    }
    raw.sort_unstable();
    let mut merged: Vec<(i64, i64)> = Vec::with_capacity(raw.len());
    for (s, e) in raw {
        let (s, e) = (s, e.min(ctx.horizon));
        if s >= e {
            continue;
        }
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

fn burst_outage(origin: i64, b: &OutageBurst, start: i64, limit: i64, rng: &mut ChaCha8Rng, out: &mut Vec<(i64, i64)>) {
    let (w0, w1) = (origin + b.at, origin + b.at + b.width);
    if w1 <= start || w0 >= limit {
        return;
    }
    let hit = rng.random::<f64>() < b.probability;
    let s = uniform_i64(rng, w0, w1 - 1);
    let d = uniform_i64(rng, b.duration_min, b.duration_max);
    if hit && s > start && s < limit {
        out.push((s, s + d));
    }
}

fn instance_name(ctx: &JobContext, rng: &mut ChaCha8Rng) -> String {
    let pid: u32 = rng.random_range(1000..65_536);
    let tag: u32 = rng.random();
    let node: u32 = rng.random_range(0..10_000);
    format!(
        "glidein_{pid}_{tag:08x}@wn{node:04}.{}",
        ctx.site.resource_name.to_ascii_lowercase()
    )
}

// Tie order when several events fall on the same second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Preempt,
    Die,
    PayloadEnd,
    Retire,
    IdleTimeout,
    OutageEnd,
    Tick,
}

fn simulate_instance(ctx: &JobContext, job: u32, k: u32, start: i64, rng: &mut ChaCha8Rng) -> InstanceLife {
    let site = ctx.site;
    let name = instance_name(ctx, rng);
    let to_retire = start + jittered(rng, site.to_retire_offset, site.offset_jitter);
    let to_die = start + jittered(rng, site.to_die_offset, site.offset_jitter);
    let preempt = sample_preemption(ctx, k, start, to_die, rng);
    let outages = sample_outages(ctx, start, to_die, rng);
    let adv = ctx.cfg.advertise_interval;

    let mut life = InstanceLife {
        site: ctx.site_index,
        job,
        name,
        start,
        to_retire,
        to_die,
        end: None,
        ads: Vec::new(),
        outages,
    };
    let mut state = PilotState::Idle;
    let mut idle_since = start;
    let mut payload_start = start;
    let mut payload_end: Option<i64> = None;
    let mut retired = false;
    let mut last_ad;
    let mut next_outage = 0usize;

    let emit = |life: &mut InstanceLife, t: i64, state: PilotState, payload_start: i64| {
        if life.outage_at(t).is_none() {
            let ad = AdRec {
                t,
                state,
                payload_start,
            };
            match life.ads.last_mut() {
                Some(last) if last.t == t => *last = ad,
                _ => life.ads.push(ad),
            }
        }
    };
    emit(&mut life, start, state, payload_start);
    last_ad = start;

    loop {
        let mut next: Option<(i64, Ev)> = None;
        let mut offer = |t: i64, ev: Ev| {
            if next.is_none_or(|n| (t, ev) < n) {
                next = Some((t, ev));
            }
        };
        if let Some(t) = preempt {
            offer(t, Ev::Preempt);
        }
        offer(to_die, Ev::Die);
        if let Some(t) = payload_end {
            offer(t, Ev::PayloadEnd);
        }
        if !retired {
            offer(to_retire, Ev::Retire);
        }
        if state == PilotState::Idle {
            offer(idle_since + site.idle_timeout, Ev::IdleTimeout);
        }
        if let Some(o) = life.outages.get(next_outage) {
            offer(o.1, Ev::OutageEnd);
        }
        offer(last_ad + adv, Ev::Tick);
        let (t, ev) = next.expect("die event always offered");
        if t > ctx.horizon {
            break;
        }
        match ev {
            Ev::Preempt => {
                life.end = Some((t, Label::Preemption));
                break;
            }
            Ev::Die => {
                life.end = Some((t, Label::Kill));
                break;
            }
            Ev::IdleTimeout => {
                life.end = Some((t, Label::IdleShutDown));
                break;
            }
            Ev::PayloadEnd => {
                payload_end = None;
                if state == PilotState::Retiring {
                    life.end = Some((t, Label::Retire));
                    break;
                }
                state = PilotState::Idle;
                idle_since = t;
                emit(&mut life, t, state, payload_start);
                last_ad = t;
            }
            Ev::Retire => {
                retired = true;
                if state == PilotState::Idle {
                    life.end = Some((t, Label::Retire));
                    break;
                }
                state = PilotState::Retiring;
                emit(&mut life, t, state, payload_start);
                last_ad = t;
            }
            Ev::OutageEnd => {
                next_outage += 1;
                emit(&mut life, t, state, payload_start);
                last_ad = t;
            }
            Ev::Tick => {
                if state == PilotState::Idle && rng.random::<f64>() < site.payload_supply {
                    let d = ctx.payload.sample(rng).round().max(1.0);
                    state = PilotState::Busy;
                    payload_start = t;
                    payload_end = Some(t.saturating_add(d.min(1e12) as i64));
                }
                emit(&mut life, t, state, payload_start);
                last_ad = t;
            }
        }
    }
    life
}
