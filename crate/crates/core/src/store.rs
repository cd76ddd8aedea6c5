//! Append-only label log.
//!
//! One JSON object per line: `{pair_a, pair_b, score, timestamp, source}`.
//! A label is durable once its terminating newline is written, so a torn
//! final line (no newline) is ignored on replay and cut off before the next
//! append.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SimilarityLabel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    #[serde(flatten)]
    pub label: SimilarityLabel,
    pub superseded: bool,
}

/// Result of reading a log file.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// Latest label per unordered pair, in log order.
    pub active: Vec<SimilarityLabel>,
    pub history: Vec<LogEntry>,
    /// Bytes up to and including the last well-formed line.
    pub valid_len: u64,
    pub torn_tail: bool,
}

fn supersede(history: &mut [LogEntry], latest: &mut HashMap<(String, String), usize>) {
    let last = history.len() - 1;
    let (a, b) = history[last].label.pair_key();
    let key = (a.to_owned(), b.to_owned());
    if let Some(prev) = latest.insert(key, last) {
        history[prev].superseded = true;
    }
}

fn active_of(history: &[LogEntry]) -> Vec<SimilarityLabel> {
    history
        .iter()
        .filter(|e| !e.superseded)
        .map(|e| e.label.clone())
        .collect()
}

/// Parses a log file. A missing file reads as empty.
pub fn replay(path: &Path) -> Result<Replay> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(path, e)),
    };
    parse_log(&bytes)
}

fn parse_log(bytes: &[u8]) -> Result<Replay> {
    let mut history: Vec<LogEntry> = Vec::new();
    let mut latest = HashMap::new();
    let mut offset = 0usize;
    let mut torn_tail = false;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let Some(end) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            log::warn!("label log: dropping torn final line {line_no}");
            torn_tail = true;
            break;
        };
        let line = &bytes[offset..offset + end];
        offset += end + 1;
        let text = std::str::from_utf8(line).map_err(|e| Error::MalformedLog {
            line: line_no,
            detail: e.to_string(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let label: SimilarityLabel =
            serde_json::from_str(text).map_err(|e| Error::MalformedLog {
                line: line_no,
                detail: e.to_string(),
            })?;
        label.check().map_err(|e| Error::MalformedLog {
            line: line_no,
            detail: e.to_string(),
        })?;
        history.push(LogEntry {
            label,
            superseded: false,
        });
        supersede(&mut history, &mut latest);
    }
    let valid_len = if torn_tail { offset } else { bytes.len() } as u64;
    Ok(Replay {
        active: active_of(&history),
        history,
        valid_len,
        torn_tail,
    })
}

#[derive(Debug)]
pub struct LabelLog {
    path: Option<PathBuf>,
    file: Option<File>,
    entries: Vec<LogEntry>,
    latest: HashMap<(String, String), usize>,
}

impl LabelLog {
    /// A log kept only in memory.
    pub fn in_memory() -> Self {
        LabelLog {
            path: None,
            file: None,
            entries: Vec::new(),
            latest: HashMap::new(),
        }
    }

    /// Opens (creating if needed) a log file and replays it.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let replayed = replay(&path)?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        if replayed.torn_tail {
            // the torn bytes were never acknowledged
            file.set_len(replayed.valid_len)
                .map_err(|e| Error::io(&path, e))?;
        }
        let mut latest = HashMap::new();
        for (i, e) in replayed.history.iter().enumerate() {
            let (a, b) = e.label.pair_key();
            latest.insert((a.to_owned(), b.to_owned()), i);
        }
        Ok(LabelLog {
            path: Some(path),
            file: Some(file),
            entries: replayed.history,
            latest,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Writes the label, then marks the previous label for the same pair as
    /// superseded. On a write error nothing changes in memory.
    pub fn append(&mut self, label: SimilarityLabel) -> Result<()> {
        label.check()?;
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_vec(&label).expect("labels serialize");
            line.push(b'\n');
            let path = self.path.as_deref().unwrap_or(Path::new(""));
            file.write_all(&line).map_err(|e| Error::io(path, e))?;
            file.flush().map_err(|e| Error::io(path, e))?;
        }
        self.entries.push(LogEntry {
            label,
            superseded: false,
        });
        supersede(&mut self.entries, &mut self.latest);
        Ok(())
    }

    pub fn history(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn active(&self) -> Vec<SimilarityLabel> {
        active_of(&self.entries)
    }

    pub fn active_count(&self) -> usize {
        self.latest.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelSource;
    use chrono::{TimeZone, Utc};

    fn label(a: &str, b: &str, score: f64, t: i64) -> SimilarityLabel {
        SimilarityLabel::at(
            a,
            b,
            score,
            LabelSource::User,
            Utc.timestamp_opt(1_700_000_000 + t, 0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn latest_wins_over_unordered_pair() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let mut log = LabelLog::open(&path).unwrap();
        log.append(label("p1", "p2", 0.8, 0)).unwrap();
        log.append(label("p2", "p1", 0.3, 1)).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.active().len(), 1);
        assert_eq!(log.active()[0].score, 0.3);
        assert!(log.history()[0].superseded);

        let r = replay(&path).unwrap();
        assert_eq!(r.active.len(), 1);
        assert_eq!(r.history.len(), 2);
        assert_eq!(r.active, log.active());
    }

    #[test]
    fn first_append() {
        let mut log = LabelLog::in_memory();
        log.append(label("a", "b", 0.5, 0)).unwrap();
        assert_eq!((log.len(), log.active_count()), (1, 1));
    }

    #[test]
    fn empty_file_replays_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let r = replay(&path).unwrap();
        assert!(r.active.is_empty() && r.history.is_empty());
    }

    #[test]
    fn torn_final_line_dropped_then_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        {
            let mut log = LabelLog::open(&path).unwrap();
            log.append(label("a", "b", 0.1, 0)).unwrap();
            log.append(label("a", "c", 0.2, 1)).unwrap();
            log.append(label("b", "c", 0.3, 2)).unwrap();
        }
        let full = std::fs::read(&path).unwrap();
        std::fs::write(&path, &full[..full.len() - 7]).unwrap();
        let r = replay(&path).unwrap();
        assert!(r.torn_tail);
        assert_eq!(r.history.len(), 2);

        let mut log = LabelLog::open(&path).unwrap();
        log.append(label("c", "d", 0.9, 3)).unwrap();
        let r = replay(&path).unwrap();
        assert!(!r.torn_tail);
        assert_eq!(r.history.len(), 3);
        assert_eq!(r.history[2].label.a, "c");
    }

    #[test]
    fn malformed_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&label("a", "b", 0.5, 0)).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n{good}\n")).unwrap();
        assert!(matches!(
            replay(&path),
            Err(Error::MalformedLog { line: 2, .. })
        ));
    }

    #[test]
    fn line_format_fields() {
        let v: serde_json::Value = serde_json::to_value(label("a", "b", 0.25, 0)).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["pair_a", "pair_b", "score", "source", "timestamp"]);
        assert_eq!(v["source"], "user");
    }
}
