//! NDJSON line formats: operation records, trace lines and the truncation marker.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CloneTrace;
use crate::ops::{OperationRecord, SCHEMA_VERSION};

/// Last ledger line of a run aborted by an I/O failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationMarker {
    pub schema: u32,
    pub truncated: bool,
    pub reason: String,
}

impl TruncationMarker {
    pub fn new(reason: impl Into<String>) -> Self {
        TruncationMarker {
            schema: SCHEMA_VERSION,
            truncated: true,
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LedgerLine {
    Record(Box<OperationRecord>),
    Truncated(String),
}

pub fn parse_ledger_line(line: &str) -> std::result::Result<LedgerLine, String> {
    if let Ok(m) = serde_json::from_str::<TruncationMarker>(line) {
        if m.truncated {
            return Ok(LedgerLine::Truncated(m.reason));
        }
    }
    let rec: OperationRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if rec.schema != SCHEMA_VERSION {
        return Err(format!("unsupported schema version {}", rec.schema));
    }
    Ok(LedgerLine::Record(Box::new(rec)))
}

/// Raw ledger lines. A final line without a terminating LF is kept, so a
/// record cut mid-line surfaces as a parse failure.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ledger_io(path, e))?;
    let mut lines: Vec<String> = text.split('\n').map(str::to_string).collect();
    if lines.last().is_some_and(String::is_empty) {
        lines.pop();
    }
    Ok(lines)
}

/// Reads the whole ledger; stops at a truncation marker. Unparseable lines
/// yield `ReplayDivergence` with their 1-based position.
pub fn read_ledger(path: &Path) -> Result<Vec<OperationRecord>> {
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        match parse_ledger_line(line) {
            Ok(LedgerLine::Record(r)) => out.push(*r),
            Ok(LedgerLine::Truncated(_)) => break,
            Err(reason) => {
                return Err(Error::ReplayDivergence {
                    record: i + 1,
                    reason: format!("malformed ledger line: {reason}"),
                })
            }
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    schema: u32,
    #[serde(flatten)]
    trace: CloneTrace,
}

pub fn trace_line(trace: &CloneTrace) -> String {
    serde_json::to_string(&TraceLine {
        schema: SCHEMA_VERSION,
        trace: trace.clone(),
    })
    .expect("traces always serialize")
}

pub fn parse_trace_line(line: &str) -> Result<CloneTrace> {
    let t: TraceLine = serde_json::from_str(line)?;
    Ok(t.trace)
}
