use std::fmt;

use serde::{Deserialize, Serialize};

/// Seconds since the Unix epoch.
pub type UnixTime = i64;

/// HTCondor startd state as advertised by a pilot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StartdState {
    Claimed,
    Unclaimed,
    Retiring,
    Other(String),
}

impl StartdState {
    pub fn as_str(&self) -> &str {
        match self {
            StartdState::Claimed => "Claimed",
            StartdState::Unclaimed => "Unclaimed",
            StartdState::Retiring => "Retiring",
            StartdState::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "Claimed" => StartdState::Claimed,
            "Unclaimed" => StartdState::Unclaimed,
            "Retiring" => StartdState::Retiring,
            other => StartdState::Other(other.to_string()),
        }
    }
}

impl fmt::Display for StartdState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for StartdState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StartdState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        Ok(StartdState::parse(&s))
    }
}

/// Identifies one site batch-system job across preemptions and restarts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PilotKey {
    pub site_wms_job_id: String,
    pub entry_name: String,
}

impl PilotKey {
    pub fn new(site_wms_job_id: impl Into<String>, entry_name: impl Into<String>) -> Self {
        Self {
            site_wms_job_id: site_wms_job_id.into(),
            entry_name: entry_name.into(),
        }
    }

    /// Single-column form `<job id>|<entry name>` used in CSV outputs.
    pub fn to_column(&self) -> String {
        format!("{}|{}", self.site_wms_job_id, self.entry_name)
    }

    pub fn from_column(s: &str) -> Option<Self> {
        let (job, entry) = s.split_once('|')?;
        Some(Self::new(job, entry))
    }
}

impl fmt::Display for PilotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.site_wms_job_id, self.entry_name)
    }
}

/// One pilot's advertised state in one snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotAd {
    #[serde(rename = "Name")]
    pub name: String,
    #[serde(rename = "State")]
    pub state: StartdState,
    #[serde(rename = "Activity")]
    pub activity: String,
    #[serde(rename = "MyCurrentTime")]
    pub my_current_time: UnixTime,
    #[serde(rename = "TotalJobRunTime")]
    pub total_job_run_time: i64,
    #[serde(rename = "DaemonStartTime")]
    pub daemon_start_time: UnixTime,
    #[serde(rename = "GLIDEIN_ToRetire")]
    pub to_retire: UnixTime,
    #[serde(rename = "GLIDEIN_ToDie")]
    pub to_die: UnixTime,
    #[serde(rename = "GLIDEIN_Site")]
    pub site: String,
    #[serde(rename = "GLIDEIN_Entry_Name")]
    pub entry_name: String,
    #[serde(rename = "GLIDEIN_ResourceName")]
    pub resource_name: String,
    #[serde(rename = "GLIDEIN_SITEWMS_JobId")]
    pub site_wms_job_id: String,
}

impl PilotAd {
    pub fn key(&self) -> PilotKey {
        PilotKey::new(self.site_wms_job_id.clone(), self.entry_name.clone())
    }

    pub fn key_ref(&self) -> (&str, &str) {
        (&self.site_wms_job_id, &self.entry_name)
    }

    /// Checks the per-ad invariants, returning the first violated one.
    pub fn validate(&self) -> Result<(), String> {
        if self.daemon_start_time > self.my_current_time {
            return Err("daemon_start_time ≤ my_current_time violated".into());
        }
        if self.to_retire > self.to_die {
            return Err("to_retire ≤ to_die violated".into());
        }
        if self.site_wms_job_id.is_empty() {
            return Err("GLIDEIN_SITEWMS_JobId is empty".into());
        }
        if self.entry_name.is_empty() {
            return Err("GLIDEIN_Entry_Name is empty".into());
        }
        if self.name.is_empty() {
            return Err("Name is empty".into());
        }
        Ok(())
    }
}

/// All ads of one snapshot, taken at `frame_time`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SnapshotFrame {
    pub frame_time: UnixTime,
    pub ads: Vec<PilotAd>,
}
