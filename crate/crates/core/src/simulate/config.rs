use serde::{Deserialize, Serialize};

use crate::distfit::{Family, Model};

use super::SimError;

fn default_start_time() -> i64 {
    1_500_000_000
}

/// A whole simulated pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sites: Vec<SiteConfig>,
    /// Seconds of simulated time; the last snapshot is taken at or before `start_time + duration`.
    pub duration: i64,
    #[serde(default = "SimConfig::default_snapshot_interval")]
    pub snapshot_interval: i64,
    #[serde(default = "SimConfig::default_advertise_interval")]
    pub advertise_interval: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_start_time")]
    pub start_time: i64,
    /// Pool-wide outage bursts (for example a collector network incident).
    #[serde(default)]
    pub outage_bursts: Vec<OutageBurst>,
}

impl SimConfig {
    fn default_snapshot_interval() -> i64 {
        60
    }

    fn default_advertise_interval() -> i64 {
        300
    }

    pub fn new(sites: Vec<SiteConfig>, duration: i64, seed: u64) -> Self {
        Self {
            sites,
            duration,
            snapshot_interval: Self::default_snapshot_interval(),
            advertise_interval: Self::default_advertise_interval(),
            seed,
            start_time: default_start_time(),
            outage_bursts: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn end_time(&self) -> i64 {
        self.start_time + self.duration
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.duration <= 0 {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.snapshot_interval <= 0 || self.advertise_interval <= 0 {
            return bad("snapshot_interval and advertise_interval must be positive".into());
        }
        if self.sites.is_empty() {
            return bad("at least one site is required".into());
        }
        for b in &self.outage_bursts {
            if !(0.0..=1.0).contains(&b.probability) || b.width <= 0 {
                return bad(format!(
                    "outage burst at {}: probability in [0,1] and width > 0 required",
                    b.at
                ));
            }
            if b.duration_min < 1 || b.duration_max < b.duration_min {
                return bad(format!(
                    "outage burst at {}: need 1 <= duration_min <= duration_max",
                    b.at
                ));
            }
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.sites {
            if !names.insert(&s.entry_name) {
                return bad(format!("duplicate entry_name {:?}", s.entry_name));
            }
            s.validate()?;
        }
        Ok(())
    }
}

/// One entry point: a cluster queue with its own pilot and preemption policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiteConfig {
    pub resource_name: String,
    pub site: String,
    pub entry_name: String,
    /// Poisson arrivals of new pilot jobs, per hour.
    pub pilot_arrival_rate: f64,
    /// Arrivals stop this many seconds after the start (whole run when absent).
    pub arrival_stop: Option<i64>,
    pub to_retire_offset: i64,
    pub to_die_offset: i64,
    /// Relative uniform jitter applied to both offsets.
    pub offset_jitter: f64,
    pub preemption: PreemptionHazard,
    pub requeue_probability: f64,
    /// Unlimited when absent.
    pub max_requeues: Option<u32>,
    pub requeue_delay_min: i64,
    pub requeue_delay_max: i64,
    /// Chance an idle pilot receives a payload at each advertise tick.
    pub payload_supply: f64,
    pub payload_duration: PayloadDuration,
    pub idle_timeout: i64,
    pub outage: OutageProcess,
}

impl Default for SiteConfig {
    fn default() -> Self {
        Self {
            resource_name: "Cluster".into(),
            site: "Site".into(),
            entry_name: "Entry".into(),
            pilot_arrival_rate: 10.0,
            arrival_stop: None,
            to_retire_offset: 15 * 3600,
            to_die_offset: 23 * 3600,
            offset_jitter: 0.02,
            preemption: PreemptionHazard::default(),
            requeue_probability: 0.0,
            max_requeues: None,
            requeue_delay_min: 300,
            requeue_delay_max: 1800,
            payload_supply: 0.9,
            payload_duration: PayloadDuration::default(),
            idle_timeout: 1200,
            outage: OutageProcess::default(),
        }
    }
}

impl SiteConfig {
    pub fn named(name: &str) -> Self {
        Self {
            resource_name: name.to_string(),
            site: format!("{name}_SITE"),
            entry_name: format!("ENTRY_{name}"),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(format!("site {}: {m}", self.entry_name)));
        if self.entry_name.is_empty() || self.resource_name.is_empty() {
            return bad("entry_name and resource_name must be non-empty");
        }
        if self.entry_name.contains('|') {
            return bad("entry_name must not contain '|'");
        }
        for p in [self.requeue_probability, self.payload_supply] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0,1]");
            }
        }
        if !(self.pilot_arrival_rate >= 0.0 && self.pilot_arrival_rate.is_finite()) {
            return bad("pilot_arrival_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.offset_jitter) {
            return bad("offset_jitter must lie in [0,1)");
        }
        if self.to_retire_offset <= 0 || self.to_retire_offset >= self.to_die_offset {
            return bad("need 0 < to_retire_offset < to_die_offset");
        }
        let lo = self.to_retire_offset as f64 * (1.0 + self.offset_jitter);
        let hi = self.to_die_offset as f64 * (1.0 - self.offset_jitter);
        if lo >= hi {
            return bad("jitter lets to_retire reach to_die");
        }
        if self.requeue_delay_min < 1 || self.requeue_delay_max < self.requeue_delay_min {
            return bad("need 1 <= requeue_delay_min <= requeue_delay_max");
        }
        if self.idle_timeout <= 0 {
            return bad("idle_timeout must be positive");
        }
        self.preemption
            .validate()
            .map_err(|m| SimError::InvalidConfig(format!("site {}: {m}", self.entry_name)))?;
        self.outage
            .validate()
            .map_err(|m| SimError::InvalidConfig(format!("site {}: {m}", self.entry_name)))?;
        self.payload_duration
            .model()
            .map_err(|e| SimError::InvalidConfig(format!("site {}: payload_duration: {e}", self.entry_name)))?;
        Ok(())
    }
}

/// Site preemption intensity, per pilot-hour:
/// `base_rate * early * diurnal * repeat_multiplier^k`, where k counts the
/// pilot job's earlier instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreemptionHazard {
    pub base_rate: f64,
    /// Applied while the instance is younger than `early_window` seconds.
    pub early_multiplier: f64,
    pub early_window: i64,
    /// Cosine bump `1 + amplitude * cos(2π (hour - peak_hour) / 24)`.
    pub diurnal_amplitude: f64,
    pub diurnal_peak_hour: f64,
    pub repeat_multiplier: f64,
}

impl Default for PreemptionHazard {
    fn default() -> Self {
        Self {
            base_rate: 0.0,
            early_multiplier: 1.0,
            early_window: 3600,
            diurnal_amplitude: 0.0,
            diurnal_peak_hour: 9.0,
            repeat_multiplier: 1.0,
        }
    }
}

impl PreemptionHazard {
    fn validate(&self) -> Result<(), String> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.base_rate)
            || !finite_nonneg(self.early_multiplier)
            || !finite_nonneg(self.repeat_multiplier)
        {
            return Err("hazard rates and multipliers must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.diurnal_amplitude) {
            return Err("diurnal_amplitude must lie in [0,1]".into());
        }
        if self.early_window < 0 {
            return Err("early_window must be non-negative".into());
        }
        Ok(())
    }

    /// Per-second hazard at instance age `age`, wall time `t`, instance index `k`.
    pub fn rate_at(&self, age: i64, t: i64, k: u32) -> f64 {
        let early = if age < self.early_window {
            self.early_multiplier
        } else {
            1.0
        };
        let hour = (t.rem_euclid(86_400)) as f64 / 3600.0;
        let diurnal =
            1.0 + self.diurnal_amplitude * (std::f64::consts::TAU * (hour - self.diurnal_peak_hour) / 24.0).cos();
        self.base_rate / 3600.0 * early * diurnal * self.repeat_multiplier.powi(k as i32)
    }

    /// Upper bound of `rate_at` for instance index `k`.
    pub fn rate_bound(&self, k: u32) -> f64 {
        self.base_rate / 3600.0
            * self.early_multiplier.max(1.0)
            * (1.0 + self.diurnal_amplitude)
            * self.repeat_multiplier.powi(k as i32)
    }
}

/// Payload length distribution, any of the fitting families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadDuration {
    pub family: Family,
    pub params: Vec<f64>,
}

impl Default for PayloadDuration {
    /// Exponential with a 4.3 h mean.
    fn default() -> Self {
        Self {
            family: Family::Gamma,
            params: vec![1.0, 0.0, 4.3 * 3600.0],
        }
    }
}

impl PayloadDuration {
    pub fn model(&self) -> Result<Model<f64>, crate::distfit::DistError> {
        Model::new(self.family, &self.params)
    }
}

/// Per-instance network outages hiding ads without killing the pilot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutageProcess {
    /// Outages per pilot-hour.
    pub rate: f64,
    pub duration_min: i64,
    pub duration_max: i64,
}

impl Default for OutageProcess {
    fn default() -> Self {
        Self {
            rate: 0.0,
            duration_min: 300,
            duration_max: 3600,
        }
    }
}

impl OutageProcess {
    fn validate(&self) -> Result<(), String> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err("outage rate must be finite and non-negative".into());
        }
        if self.duration_min < 1 || self.duration_max < self.duration_min {
            return Err("need 1 <= outage duration_min <= duration_max".into());
        }
        Ok(())
    }
}

/// Every pilot alive at `at` (seconds after start) loses connectivity with
/// `probability`, at a uniform moment within `width` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageBurst {
    pub at: i64,
    pub width: i64,
    pub probability: f64,
    pub duration_min: i64,
    pub duration_max: i64,
}
