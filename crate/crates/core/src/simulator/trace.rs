//! Line-delimited JSON request traces.
//!
//! The first line is a header object; every following line is one request
//! record, ordered by `t` starting at 1 with no gaps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{RequestEvent, RequestInput, ZooConfig};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub models: usize,
    pub dim: usize,
    pub zoo_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub token_count: u64,
    pub features: Vec<f64>,
    /// 0/1 satisfaction per model.
    pub labels: Vec<u8>,
    /// Joules per model.
    pub costs: Vec<f64>,
}

impl TraceRecord {
    pub fn label_bits(&self) -> Vec<bool> {
        self.labels.iter().map(|&b| b == 1).collect()
    }

    pub fn to_event(&self) -> RequestEvent {
        RequestEvent {
            t: self.t,
            token_count: self.token_count,
            input: RequestInput::Features(self.features.clone()),
            labels: Some(self.label_bits()),
            costs: Some(self.costs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

/// Hex SHA-256 over the zoo's names and cost profiles.
pub fn zoo_hash(zoo: &ZooConfig) -> String {
    let mut h = Sha256::new();
    for m in &zoo.models {
        h.update(m.name.as_bytes());
        h.update([0u8]);
        h.update(m.base_cost.to_bits().to_le_bytes());
        h.update(m.cost_per_token.to_bits().to_le_bytes());
    }
    h.update((zoo.largest.0 as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean satisfaction per model over the whole trace.
    pub fn label_rates(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.header.models];
        for r in &self.records {
            for (s, &b) in sums.iter_mut().zip(&r.labels) {
                *s += f64::from(b);
            }
        }
        let n = self.records.len().max(1) as f64;
        sums.into_iter().map(|s| s / n).collect()
    }

    pub fn check_zoo(&self, zoo: &ZooConfig) -> Result<()> {
        if self.header.models != zoo.len() {
            return Err(Error::TraceMismatch(format!(
                "trace has {} models, zoo has {}",
                self.header.models,
                zoo.len()
            )));
        }
        let hash = zoo_hash(zoo);
        if self.header.zoo_hash != hash {
            return Err(Error::TraceMismatch(format!(
                "zoo hash {} differs from trace header {}",
                hash, self.header.zoo_hash
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.header.schema_version != TRACE_SCHEMA_VERSION {
            return Err(Error::Trace {
                line: 1,
                msg: format!("unsupported schema version {}", self.header.schema_version),
            });
        }
        for (i, r) in self.records.iter().enumerate() {
            let line = i + 2;
            let bad = |msg: String| Error::Trace { line, msg };
            if r.t != i as u64 + 1 {
                return Err(bad(format!("expected t = {}, found {}", i + 1, r.t)));
            }
            if r.features.len() != self.header.dim {
                return Err(bad(format!("{} features, header says {}", r.features.len(), self.header.dim)));
            }
            if r.labels.len() != self.header.models || r.costs.len() != self.header.models {
                return Err(bad("labels/costs length differs from model count".into()));
            }
            if r.labels.iter().any(|&b| b > 1) {
                return Err(bad("labels must be 0 or 1".into()));
            }
            if r.costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(bad("costs must be positive".into()));
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite feature".into()));
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header: TraceHeader = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|e| Error::Trace {
                line: 1,
                msg: e.to_string(),
            })?,
            None => {
                return Err(Error::Trace {
                    line: 1,
                    msg: "empty trace".into(),
                })
            }
        };
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| Error::Trace {
                line: i + 1,
                msg: e.to_string(),
            })?;
            records.push(rec);
        }
        let trace = Self { header, records };
        trace.validate()?;
        Ok(trace)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_jsonl(File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }
}
