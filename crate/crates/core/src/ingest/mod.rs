//! Snapshot files: one newline-delimited JSON file per collector snapshot,
//! named `snapshot_<unix_ts>.jsonl`.

mod ad;

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use ad::{PilotAd, PilotKey, SnapshotFrame, StartdState, UnixTime};

pub const DEFAULT_SKEW_TOLERANCE: i64 = 300;
pub const DEFAULT_GAP_TOLERANCE: i64 = 180;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: file name does not match snapshot_<unix_ts>.jsonl")]
    BadFilename(PathBuf),
    #[error("{path}:{line_no}: {reason}")]
    MalformedLine {
        path: PathBuf,
        line_no: usize,
        reason: String,
    },
    #[error("{path}: more than one ad for pilot {key}")]
    DuplicateKeyInFrame { path: PathBuf, key: PilotKey },
    #[error("{0}: no snapshot files")]
    EmptyDirectory(PathBuf),
    #[error("snapshot timestamp {frame_time} appears in both {first} and {second}")]
    NonMonotoneTimestamps {
        frame_time: UnixTime,
        first: PathBuf,
        second: PathBuf,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Maximum |MyCurrentTime - frame_time| accepted for an ad.
    pub skew_tolerance: i64,
    /// Inter-frame gaps above this are reported.
    pub gap_tolerance: i64,
    /// Abort on the first malformed line instead of quarantining it.
    pub strict: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            skew_tolerance: DEFAULT_SKEW_TOLERANCE,
            gap_tolerance: DEFAULT_GAP_TOLERANCE,
            strict: false,
        }
    }
}

/// A line that was rejected and set aside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParsedSnapshot {
    pub frame: SnapshotFrame,
    pub malformed: Vec<MalformedLine>,
    /// Non-blank lines read; always `frame.ads.len() + malformed.len()`.
    pub line_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGap {
    pub from: UnixTime,
    pub to: UnixTime,
}

impl FrameGap {
    pub fn seconds(&self) -> i64 {
        self.to - self.from
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantinedLine {
    pub file: PathBuf,
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub frames: Vec<SnapshotFrame>,
    pub gaps: Vec<FrameGap>,
    pub quarantine: Vec<QuarantinedLine>,
}

impl SnapshotSet {
    pub fn ad_count(&self) -> usize {
        self.frames.iter().map(|f| f.ads.len()).sum()
    }
}

pub fn snapshot_file_name(frame_time: UnixTime) -> String {
    format!("snapshot_{frame_time}.jsonl")
}

/// Extracts the timestamp from `snapshot_<unix_ts>.jsonl`.
pub fn frame_time_from_file_name(name: &str) -> Option<UnixTime> {
    let digits = name.strip_prefix("snapshot_")?.strip_suffix(".jsonl")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses the ads of one frame from JSONL text.
pub fn parse_frame_text(
    text: &str,
    frame_time: UnixTime,
    path: &Path,
    opts: &IngestOptions,
) -> Result<ParsedSnapshot, IngestError> {
    let mut ads = Vec::new();
    let mut malformed = Vec::new();
    let mut line_count = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        line_count += 1;
        let checked = serde_json::from_str::<PilotAd>(line)
            .map_err(|e| e.to_string())
            .and_then(|ad| {
                ad.validate()?;
                if (ad.my_current_time - frame_time).abs() > opts.skew_tolerance {
                    return Err(format!(
                        "MyCurrentTime {} outside ±{} s of frame time {}",
                        ad.my_current_time, opts.skew_tolerance, frame_time
                    ));
                }
                Ok(ad)
            });
        match checked {
            Ok(ad) => ads.push(ad),
            Err(reason) if opts.strict => {
                return Err(IngestError::MalformedLine {
                    path: path.to_path_buf(),
                    line_no,
                    reason,
                })
            }
            Err(reason) => malformed.push(MalformedLine { line_no, reason }),
        }
    }

    let mut seen = HashSet::with_capacity(ads.len());
    for ad in &ads {
        if !seen.insert(ad.key_ref()) {
            return Err(IngestError::DuplicateKeyInFrame {
                path: path.to_path_buf(),
                key: ad.key(),
            });
        }
    }

    Ok(ParsedSnapshot {
        frame: SnapshotFrame { frame_time, ads },
        malformed,
        line_count,
    })
}

pub fn parse_snapshot_file(path: &Path) -> Result<ParsedSnapshot, IngestError> {
    parse_snapshot_file_with(path, &IngestOptions::default())
}

pub fn parse_snapshot_file_with(path: &Path, opts: &IngestOptions) -> Result<ParsedSnapshot, IngestError> {
    let frame_time = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(frame_time_from_file_name)
        .ok_or_else(|| IngestError::BadFilename(path.to_path_buf()))?;
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_frame_text(&text, frame_time, path, opts)
}

pub fn load_snapshot_dir(dir: &Path) -> Result<SnapshotSet, IngestError> {
    load_snapshot_dir_with(dir, &IngestOptions::default())
}

/// Loads every `*.jsonl` file of `dir` (other files are ignored), ordered by frame time.
pub fn load_snapshot_dir_with(dir: &Path, opts: &IngestOptions) -> Result<SnapshotSet, IngestError> {
    let mut frames = Vec::new();
    let report = stream_snapshot_dir(dir, opts, |frame| frames.push(frame))?;
    Ok(SnapshotSet {
        frames,
        gaps: report.gaps,
        quarantine: report.quarantine,
    })
}

/// What [`stream_snapshot_dir`] found besides the frames themselves.
#[derive(Debug, Clone, Default)]
pub struct DirReport {
    pub frame_count: usize,
    pub ad_count: usize,
    pub gaps: Vec<FrameGap>,
    pub quarantine: Vec<QuarantinedLine>,
}

/// Sorted snapshot file list of `dir`, checked for duplicate timestamps.
pub fn snapshot_files(dir: &Path) -> Result<Vec<(UnixTime, PathBuf)>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "jsonl") {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let frame_time = frame_time_from_file_name(name).ok_or_else(|| IngestError::BadFilename(path.clone()))?;
            files.push((frame_time, path));
        }
    }
    if files.is_empty() {
        return Err(IngestError::EmptyDirectory(dir.to_path_buf()));
    }
    files.sort();
    for pair in files.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(IngestError::NonMonotoneTimestamps {
                frame_time: pair[0].0,
                first: pair[0].1.clone(),
                second: pair[1].1.clone(),
            });
        }
    }
    Ok(files)
}

/// Parses the snapshot files of `dir` in time order, handing each frame to
/// `on_frame` as soon as it is read so the whole directory never sits in memory.
pub fn stream_snapshot_dir(
    dir: &Path,
    opts: &IngestOptions,
    mut on_frame: impl FnMut(SnapshotFrame),
) -> Result<DirReport, IngestError> {
    let files = snapshot_files(dir)?;
    let mut report = DirReport::default();
    let mut prev: Option<UnixTime> = None;
    for (frame_time, path) in &files {
        let parsed = parse_snapshot_file_with(path, opts)?;
        report
            .quarantine
            .extend(parsed.malformed.into_iter().map(|m| QuarantinedLine {
                file: path.clone(),
                line_no: m.line_no,
                reason: m.reason,
            }));
        if let Some(p) = prev {
            if frame_time - p > opts.gap_tolerance {
                report.gaps.push(FrameGap {
                    from: p,
                    to: *frame_time,
                });
            }
        }
        prev = Some(*frame_time);
        report.frame_count += 1;
        report.ad_count += parsed.frame.ads.len();
        on_frame(parsed.frame);
    }
    if !report.quarantine.is_empty() {
        log::warn!("{} malformed snapshot lines quarantined", report.quarantine.len());
    }
    Ok(report)
}

/// Inter-frame intervals longer than `tolerance` seconds.
pub fn frame_gaps(frames: &[SnapshotFrame], tolerance: i64) -> Vec<FrameGap> {
    frames
        .windows(2)
        .filter(|w| w[1].frame_time - w[0].frame_time > tolerance)
        .map(|w| FrameGap {
            from: w[0].frame_time,
            to: w[1].frame_time,
        })
        .collect()
}

/// Serializes a frame's ads as JSONL (one object per line, trailing newline).
pub fn frame_to_jsonl<W: Write>(frame: &SnapshotFrame, out: &mut W) -> std::io::Result<()> {
    for ad in &frame.ads {
        serde_json::to_writer(&mut *out, ad)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `frame` as `dir/snapshot_<frame_time>.jsonl` and returns the path.
pub fn write_snapshot_file(dir: &Path, frame: &SnapshotFrame) -> Result<PathBuf, IngestError> {
    let path = dir.join(snapshot_file_name(frame.frame_time));
    let io_err = |source| IngestError::Io {
        path: path.clone(),
        source,
    };
    let file = fs::File::create(&path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    frame_to_jsonl(frame, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ad(name: &str, job: &str, t: UnixTime) -> PilotAd {
        PilotAd {
            name: name.into(),
            state: StartdState::Claimed,
            activity: "Busy".into(),
            my_current_time: t,
            total_job_run_time: 30,
            daemon_start_time: t - 100,
            to_retire: t + 1000,
            to_die: t + 2000,
            site: "SiteA".into(),
            entry_name: "ENTRY_A".into(),
            resource_name: "ClusterA".into(),
            site_wms_job_id: job.into(),
        }
    }

    fn line(a: &PilotAd) -> String {
        serde_json::to_string(a).unwrap()
    }

    #[test]
    fn empty_file_gives_empty_frame() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("snapshot_1000.jsonl");
        fs::write(&p, "").unwrap();
        let parsed = parse_snapshot_file(&p).unwrap();
        assert_eq!(parsed.frame.frame_time, 1000);
        assert!(parsed.frame.ads.is_empty());
        assert!(parsed.malformed.is_empty());
    }

    #[test]
    fn single_valid_line_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let a = ad("glidein_1@host", "101.0", 1000);
        let p = dir.path().join("snapshot_1000.jsonl");
        fs::write(&p, line(&a) + "\n").unwrap();
        let parsed = parse_snapshot_file(&p).unwrap();
        assert_eq!(parsed.frame.ads, vec![a]);
    }

    #[test]
    fn json_keys_are_the_collector_attribute_names() {
        let v: serde_json::Value = serde_json::to_value(ad("n", "1", 10)).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut want = vec![
            "Name",
            "State",
            "Activity",
            "MyCurrentTime",
            "TotalJobRunTime",
            "DaemonStartTime",
            "GLIDEIN_ToRetire",
            "GLIDEIN_ToDie",
            "GLIDEIN_Site",
            "GLIDEIN_Entry_Name",
            "GLIDEIN_ResourceName",
            "GLIDEIN_SITEWMS_JobId",
        ];
        want.sort();
        assert_eq!(keys, want);
    }

    #[test]
    fn retire_after_die_is_quarantined() {
        let mut a = ad("n", "1", 1000);
        a.to_die = a.to_retire - 1;
        let parsed = parse_frame_text(&line(&a), 1000, Path::new("x"), &IngestOptions::default()).unwrap();
        assert!(parsed.frame.ads.is_empty());
        assert_eq!(parsed.malformed.len(), 1);
        assert_eq!(parsed.malformed[0].reason, "to_retire ≤ to_die violated");
    }

    #[test]
    fn strict_mode_reports_malformed_line() {
        let mut a = ad("n", "1", 1000);
        a.to_die = a.to_retire - 1;
        let text = format!("{}\n{}\n", line(&ad("m", "2", 1000)), line(&a));
        let opts = IngestOptions {
            strict: true,
            ..Default::default()
        };
        match parse_frame_text(&text, 1000, Path::new("x"), &opts) {
            Err(IngestError::MalformedLine { line_no, reason, .. }) => {
                assert_eq!(line_no, 2);
                assert_eq!(reason, "to_retire ≤ to_die violated");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_attribute_rejects_the_ad() {
        let mut v = serde_json::to_value(ad("n", "1", 1000)).unwrap();
        v.as_object_mut().unwrap().remove("GLIDEIN_ToDie");
        let parsed = parse_frame_text(&v.to_string(), 1000, Path::new("x"), &IngestOptions::default()).unwrap();
        assert_eq!(parsed.malformed.len(), 1);
        assert!(parsed.malformed[0].reason.contains("GLIDEIN_ToDie"));
    }

    #[test]
    fn skewed_clock_is_quarantined() {
        let a = ad("n", "1", 1000);
        let parsed = parse_frame_text(&line(&a), 1301, Path::new("x"), &IngestOptions::default()).unwrap();
        assert_eq!(parsed.malformed.len(), 1);
        let parsed = parse_frame_text(&line(&a), 1300, Path::new("x"), &IngestOptions::default()).unwrap();
        assert_eq!(parsed.frame.ads.len(), 1);
    }

    #[test]
    fn counts_add_up() {
        let mut bad = ad("b", "3", 1000);
        bad.entry_name.clear();
        let text = format!(
            "{}\n\n{}\nnot json\n{}\n",
            line(&ad("a", "1", 1000)),
            line(&bad),
            line(&ad("c", "2", 1000))
        );
        let parsed = parse_frame_text(&text, 1000, Path::new("x"), &IngestOptions::default()).unwrap();
        assert_eq!(parsed.line_count, 4);
        assert_eq!(parsed.frame.ads.len(), parsed.line_count - parsed.malformed.len());
        assert_eq!(
            parsed.malformed.iter().map(|m| m.line_no).collect::<Vec<_>>(),
            vec![3, 4]
        );
    }

    #[test]
    fn duplicate_key_is_an_error() {
        let text = format!("{}\n{}\n", line(&ad("a", "1", 1000)), line(&ad("b", "1", 1000)));
        assert!(matches!(
            parse_frame_text(&text, 1000, Path::new("x"), &IngestOptions::default()),
            Err(IngestError::DuplicateKeyInFrame { .. })
        ));
    }

    #[test]
    fn bad_filename_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "snap_10.jsonl",
            "snapshot_.jsonl",
            "snapshot_abc.jsonl",
            "snapshot_-5.jsonl",
        ] {
            let p = dir.path().join(name);
            fs::write(&p, "").unwrap();
            assert!(
                matches!(parse_snapshot_file(&p), Err(IngestError::BadFilename(_))),
                "{name}"
            );
        }
    }

    #[test]
    fn directory_is_sorted_without_gaps() {
        let dir = tempfile::tempdir().unwrap();
        for t in [180, 60, 120] {
            fs::write(dir.path().join(snapshot_file_name(t)), "").unwrap();
        }
        fs::write(dir.path().join("truth.csv"), "ignored").unwrap();
        let set = load_snapshot_dir(dir.path()).unwrap();
        let times: Vec<_> = set.frames.iter().map(|f| f.frame_time).collect();
        assert_eq!(times, vec![60, 120, 180]);
        assert!(set.gaps.is_empty());
    }

    #[test]
    fn long_interval_is_reported_as_gap() {
        let dir = tempfile::tempdir().unwrap();
        for t in [60, 600] {
            fs::write(dir.path().join(snapshot_file_name(t)), "").unwrap();
        }
        let set = load_snapshot_dir(dir.path()).unwrap();
        assert_eq!(set.gaps, vec![FrameGap { from: 60, to: 600 }]);
        assert_eq!(set.gaps[0].seconds(), 540);
    }

    #[test]
    fn repeated_timestamp_is_non_monotone() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("snapshot_60.jsonl"), "").unwrap();
        fs::write(dir.path().join("snapshot_060.jsonl"), "").unwrap();
        assert!(matches!(
            load_snapshot_dir(dir.path()),
            Err(IngestError::NonMonotoneTimestamps { frame_time: 60, .. })
        ));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_snapshot_dir(dir.path()),
            Err(IngestError::EmptyDirectory(_))
        ));
    }
}
