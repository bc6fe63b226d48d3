//! Append-only event log.
//!
//! The log is a directory of segment files named after the offset of their
//! first record. Each record is one line:
//!
//! ```text
//! <byte length of json> <crc32 of json, 8 hex digits> <json>\n
//! ```
//!
//! On open, every segment but the last must decode cleanly. The last segment
//! is cut back to its longest valid prefix, which discards a record torn by a
//! crash mid-write.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use messplus_core::types::RequestInput;

use crate::error::ServiceError;

pub const LOG_SCHEMA_VERSION: u32 = 1;

const SEGMENT_PREFIX: &str = "segment-";
const SEGMENT_SUFFIX: &str = ".log";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEvent {
    Route {
        t: u64,
        token_count: u64,
        input: RequestInput,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<bool>>,
    },
    Feedback {
        decision_id: u64,
        satisfied: bool,
    },
    Labels {
        decision_id: u64,
        labels: Vec<bool>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct LogRecord {
    schema_version: u32,
    #[serde(flatten)]
    event: LogEvent,
}

pub fn encode_record(event: &LogEvent) -> Vec<u8> {
    let json = serde_json::to_vec(&LogRecord {
        schema_version: LOG_SCHEMA_VERSION,
        event: event.clone(),
    })
    .expect("log events always serialize");
    let mut out = format!("{} {:08x} ", json.len(), crc32fast::hash(&json)).into_bytes();
    out.extend_from_slice(&json);
    out.push(b'\n');
    out
}

/// Result of decoding a segment: the valid records, the byte length they
/// cover, and why decoding stopped early, if it did.
#[derive(Debug)]
pub struct Decoded {
    pub events: Vec<LogEvent>,
    pub valid_len: usize,
    pub stopped: Option<String>,
}

pub fn decode_records(bytes: &[u8]) -> Decoded {
    let mut events = Vec::new();
    let mut pos = 0;
    let stopped = loop {
        if pos == bytes.len() {
            break None;
        }
        match decode_one(&bytes[pos..]) {
            Ok((event, used)) => {
                events.push(event);
                pos += used;
            }
            Err(msg) => break Some(format!("byte {pos}: {msg}")),
        }
    };
    Decoded {
        events,
        valid_len: pos,
        stopped,
    }
}

fn decode_one(buf: &[u8]) -> Result<(LogEvent, usize), String> {
    let space = buf
        .iter()
        .take(21)
        .position(|&b| b == b' ')
        .ok_or("missing length prefix")?;
    let len: usize = std::str::from_utf8(&buf[..space])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or("bad length prefix")?;
    let crc_start = space + 1;
    let json_start = crc_start + 9;
    if buf.len() < json_start || buf[json_start - 1] != b' ' {
        return Err("truncated checksum".into());
    }
    let crc = std::str::from_utf8(&buf[crc_start..crc_start + 8])
        .ok()
        .and_then(|s| u32::from_str_radix(s, 16).ok())
        .ok_or("bad checksum field")?;
    let end = json_start + len;
    if buf.len() < end + 1 {
        return Err("truncated record".into());
    }
    if buf[end] != b'\n' {
        return Err("missing record terminator".into());
    }
    let json = &buf[json_start..end];
    if crc32fast::hash(json) != crc {
        return Err("checksum mismatch".into());
    }
    let record: LogRecord = serde_json::from_slice(json).map_err(|e| e.to_string())?;
    if record.schema_version != LOG_SCHEMA_VERSION {
        return Err(format!("unsupported schema version {}", record.schema_version));
    }
    Ok((record.event, end + 1))
}

fn segment_name(start: u64) -> String {
    format!("{SEGMENT_PREFIX}{start:020}{SEGMENT_SUFFIX}")
}

fn list_segments(dir: &Path) -> Result<Vec<(u64, PathBuf)>, ServiceError> {
    let mut segments = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(start) = name
            .strip_prefix(SEGMENT_PREFIX)
            .and_then(|r| r.strip_suffix(SEGMENT_SUFFIX))
            .and_then(|n| n.parse::<u64>().ok())
        {
            segments.push((start, path));
        }
    }
    segments.sort();
    Ok(segments)
}

#[derive(Debug)]
pub struct EventLog {
    dir: PathBuf,
    segment_records: u64,
    /// Offset the next appended record will get.
    next_offset: u64,
    segment_start: u64,
    writer: File,
}

/// What [`EventLog::open`] recovered.
#[derive(Debug)]
pub struct Recovery {
    /// Events at offsets `from..`, in order.
    pub events: Vec<LogEvent>,
    /// Bytes cut from a torn tail.
    pub truncated_bytes: u64,
}

impl EventLog {
    /// Opens (or creates) the log in `dir`, repairing a torn tail, and
    /// returns the events from offset `from` on.
    pub fn open(dir: &Path, segment_records: u64, from: u64) -> Result<(Self, Recovery), ServiceError> {
        if segment_records == 0 {
            return Err(ServiceError::Config("segment_records must be positive".into()));
        }
        fs::create_dir_all(dir)?;
        let mut segments = list_segments(dir)?;
        if segments.is_empty() {
            let path = dir.join(segment_name(0));
            File::create(&path)?.sync_all()?;
            segments.push((0, path));
        }
        if segments[0].0 != 0 {
            return Err(ServiceError::CorruptLog {
                path: segments[0].1.clone(),
                msg: "first segment does not start at offset 0".into(),
            });
        }

        let mut events = Vec::new();
        let mut truncated_bytes = 0;
        let last = segments.len() - 1;
        let mut end = 0;
        for (i, (start, path)) in segments.iter().enumerate() {
            let next_start = segments.get(i + 1).map(|s| s.0);
            if next_start.is_some_and(|n| n <= from) {
                continue;
            }
            let bytes = fs::read(path)?;
            let decoded = decode_records(&bytes);
            let count = decoded.events.len() as u64;
            if i < last {
                if let Some(msg) = decoded.stopped {
                    return Err(ServiceError::CorruptLog { path: path.clone(), msg });
                }
                if Some(start + count) != next_start {
                    return Err(ServiceError::CorruptLog {
                        path: path.clone(),
                        msg: format!("holds {count} records, next segment starts at {}", next_start.unwrap_or(0)),
                    });
                }
            } else if let Some(msg) = &decoded.stopped {
                truncated_bytes = (bytes.len() - decoded.valid_len) as u64;
                tracing::warn!(path = %path.display(), %msg, truncated_bytes, "truncating torn log tail");
                let f = OpenOptions::new().write(true).open(path)?;
                f.set_len(decoded.valid_len as u64)?;
                f.sync_all()?;
            }
            let skip = from.saturating_sub(*start).min(count) as usize;
            events.extend(decoded.events.into_iter().skip(skip));
            end = start + count;
        }
        if from > end {
            return Err(ServiceError::Checkpoint(format!(
                "checkpoint offset {from} is past the end of the log ({end})"
            )));
        }

        let (segment_start, path) = segments[last].clone();
        let writer = OpenOptions::new().append(true).open(path)?;
        let log = Self {
            dir: dir.to_path_buf(),
            segment_records,
            next_offset: end,
            segment_start,
            writer,
        };
        Ok((log, Recovery { events, truncated_bytes }))
    }

    /// Number of records in the log, which is also the next offset.
    pub fn offset(&self) -> u64 {
        self.next_offset
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Appends one record and syncs it to disk. Returns the new offset.
    pub fn append(&mut self, event: &LogEvent) -> Result<u64, ServiceError> {
        if self.next_offset - self.segment_start >= self.segment_records {
            let path = self.dir.join(segment_name(self.next_offset));
            let file = OpenOptions::new().create_new(true).append(true).open(path)?;
            File::open(&self.dir)?.sync_all()?;
            self.writer = file;
            self.segment_start = self.next_offset;
        }
        self.writer.write_all(&encode_record(event))?;
        self.writer.sync_data()?;
        self.next_offset += 1;
        Ok(self.next_offset)
    }

    /// Paths of all segment files, oldest first.
    pub fn segments(&self) -> Result<Vec<PathBuf>, ServiceError> {
        Ok(list_segments(&self.dir)?.into_iter().map(|(_, p)| p).collect())
    }
}
