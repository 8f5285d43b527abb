//! Line-delimited append-only event log.
//!
//! Each line is one JSON object tagged by `type`: `detection`,
//! `recommendation` or `feedback`. Bare wire-format detection events (no
//! `type` field, as written by `gen-stream`) are accepted on read as well.
//! A final line without a newline is a torn write and is ignored.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::occupancy::{OccupancyState, Registry, TrackerCheckpoint, TrackerConfig};
use crate::perception::DetectionEvent;
use crate::recommender::Recommendation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub recommendation_id: String,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_lot_id: Option<String>,
    /// UTC milliseconds.
    pub submitted_at: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Detection { event: DetectionEvent },
    Recommendation { recommendation: Recommendation },
    Feedback { feedback: FeedbackRecord },
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("log records serialize");
        s.push('\n');
        s
    }

    /// Parses a tagged record, or a bare wire-format detection event.
    pub fn parse(line: &str) -> Result<LogRecord, serde_json::Error> {
        let value: serde_json::Value = serde_json::from_str(line)?;
        if value.get("type").is_some() {
            serde_json::from_value(value)
        } else {
            Ok(LogRecord::Detection {
                event: serde_json::from_value(value)?,
            })
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Config(#[from] crate::occupancy::ConfigError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything reconstructed from a log.
#[derive(Debug, Clone)]
pub struct Replay {
    pub state: OccupancyState,
    /// Issued recommendation id → best lot id.
    pub issued: HashMap<String, String>,
    /// Feedback records seen per recommendation id.
    pub feedback: HashMap<String, Vec<FeedbackRecord>>,
    pub detections: usize,
    /// Number of complete lines consumed.
    pub lines: usize,
    /// Byte length of the complete-line prefix.
    pub valid_len: u64,
}

impl Replay {
    pub fn fresh(registry: Registry, config: TrackerConfig) -> Result<Self, LogError> {
        Ok(Replay {
            state: OccupancyState::new(registry, config)?,
            issued: HashMap::new(),
            feedback: HashMap::new(),
            detections: 0,
            lines: 0,
            valid_len: 0,
        })
    }

    pub fn duplicate_feedback_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .feedback
            .iter()
            .filter(|(_, v)| v.len() > 1)
            .map(|(k, _)| k.as_str())
            .collect();
        ids.sort_unstable();
        ids
    }

    fn apply(&mut self, record: LogRecord, line: usize) -> Result<(), LogError> {
        match record {
            LogRecord::Detection { event } => {
                self.state.apply_event(&event).map_err(|e| LogError::Corrupt {
                    line,
                    reason: e.to_string(),
                })?;
                self.detections += 1;
            }
            LogRecord::Recommendation { recommendation } => {
                self.issued
                    .insert(recommendation.recommendation_id, recommendation.best.lot_id);
            }
            LogRecord::Feedback { feedback } => {
                self.feedback
                    .entry(feedback.recommendation_id.clone())
                    .or_default()
                    .push(feedback);
            }
        }
        Ok(())
    }

    /// Applies the complete lines of `reader`, numbering them from
    /// `self.lines + 1`.
    fn consume(&mut self, reader: impl Read) -> Result<(), LogError> {
        let mut reader = BufReader::new(reader);
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = reader.read_line(&mut buf).map_err(|e| LogError::Corrupt {
                line: self.lines + 1,
                reason: e.to_string(),
            })?;
            if n == 0 || !buf.ends_with('\n') {
                break;
            }
            let line_no = self.lines + 1;
            let text = buf.trim_end_matches(['\n', '\r']);
            if !text.trim().is_empty() {
                let record = LogRecord::parse(text).map_err(|e| LogError::Corrupt {
                    line: line_no,
                    reason: e.to_string(),
                })?;
                self.apply(record, line_no)?;
            }
            self.lines = line_no;
            self.valid_len += n as u64;
        }
        Ok(())
    }
}

/// Rebuilds tracker state from a log, from genesis.
///
/// A missing file replays as an empty log.
pub fn replay_log(path: &Path, registry: Registry, config: TrackerConfig) -> Result<Replay, LogError> {
    let mut replay = Replay::fresh(registry, config)?;
    match File::open(path) {
        Ok(f) => replay.consume(f)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(path)(e)),
    }
    Ok(replay)
}

/// Replays log text held in memory.
pub fn replay_str(text: &str, registry: Registry, config: TrackerConfig) -> Result<Replay, LogError> {
    let mut replay = Replay::fresh(registry, config)?;
    replay.consume(text.as_bytes())?;
    Ok(replay)
}

/// Periodic state dump that lets recovery skip the log prefix it covers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub log_offset: u64,
    pub lines: usize,
    pub detections: usize,
    pub tracker: TrackerCheckpoint,
    pub issued: HashMap<String, String>,
    pub feedback: HashMap<String, Vec<FeedbackRecord>>,
}

pub fn checkpoint_path(log_path: &Path) -> PathBuf {
    sibling(log_path, "checkpoint.json")
}

pub fn quarantine_path(log_path: &Path) -> PathBuf {
    sibling(log_path, "quarantine")
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

pub fn write_checkpoint(log_path: &Path, replay_like: &Checkpoint) -> Result<(), LogError> {
    let path = checkpoint_path(log_path);
    let tmp = sibling(log_path, "checkpoint.tmp");
    let body = serde_json::to_vec(replay_like).expect("checkpoint serializes");
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(&body).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(())
}

/// Recovers state, using the checkpoint when it is consistent with the log
/// and falling back to a full replay otherwise. The torn tail, if any, is
/// cut off so later appends start on a clean line.
pub fn recover(log_path: &Path, registry: Registry, config: TrackerConfig) -> Result<Replay, LogError> {
    let file_len = match std::fs::metadata(log_path) {
        Ok(m) => m.len(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
        Err(e) => return Err(io_err(log_path)(e)),
    };

    let from_checkpoint = std::fs::read(checkpoint_path(log_path))
        .ok()
        .and_then(|bytes| serde_json::from_slice::<Checkpoint>(&bytes).ok())
        .filter(|cp| cp.log_offset <= file_len && cp.tracker.config == config)
        .and_then(|cp| {
            let state = OccupancyState::restore(registry.clone(), cp.tracker).ok()?;
            Some(Replay {
                state,
                issued: cp.issued,
                feedback: cp.feedback,
                detections: cp.detections,
                lines: cp.lines,
                valid_len: cp.log_offset,
            })
        });

    let replay = match from_checkpoint {
        Some(mut replay) => {
            let mut f = File::open(log_path).map_err(io_err(log_path))?;
            f.seek(SeekFrom::Start(replay.valid_len)).map_err(io_err(log_path))?;
            replay.consume(f)?;
            replay
        }
        None => replay_log(log_path, registry, config)?,
    };

    if replay.valid_len < file_len {
        let f = OpenOptions::new().write(true).open(log_path).map_err(io_err(log_path))?;
        f.set_len(replay.valid_len).map_err(io_err(log_path))?;
        f.sync_all().map_err(io_err(log_path))?;
    }
    Ok(replay)
}

/// Single-writer append handle.
#[derive(Debug)]
pub struct LogWriter {
    path: PathBuf,
    file: File,
    offset: u64,
    lines: usize,
    fsync: bool,
}

impl LogWriter {
    pub fn open(path: &Path, fsync: bool) -> Result<Self, LogError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        let offset = file.metadata().map_err(io_err(path))?.len();
        Ok(LogWriter {
            path: path.to_path_buf(),
            file,
            offset,
            lines: 0,
            fsync,
        })
    }

    /// Sets the line counter after recovery.
    pub fn with_lines(mut self, lines: usize) -> Self {
        self.lines = lines;
        self
    }

    /// Appends one record; returns once it is on disk (when fsync is on).
    pub fn append(&mut self, record: &LogRecord) -> Result<(), LogError> {
        let line = record.to_line();
        self.file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        if self.fsync {
            self.file.sync_data().map_err(io_err(&self.path))?;
        }
        self.offset += line.len() as u64;
        self.lines += 1;
        Ok(())
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Appends one line to the quarantine file next to the log.
pub fn quarantine(log_path: &Path, code: &str, reason: &str, raw: &str) -> Result<(), LogError> {
    let path = quarantine_path(log_path);
    let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
    let mut line = serde_json::to_string(&serde_json::json!({ "code": code, "reason": reason, "raw": raw }))
        .expect("json");
    line.push('\n');
    f.write_all(line.as_bytes()).map_err(io_err(&path))?;
    Ok(())
}
