//! Episode trace records: newline-delimited JSON consumed by the analysis
//! module (visitation heatmaps) and useful for debugging agent behavior.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Action;

/// One environment transition, as stored in trace files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: u64,
    pub step: u32,
    /// Agent position after the action, `(x, y)`.
    pub agent_pos: (usize, usize),
    pub action: Action,
    pub reward: f64,
    pub done: bool,
}

/// Append one record as a JSON line.
pub fn write_record(w: &mut impl Write, record: &TraceRecord) -> std::io::Result<()> {
    let line = serde_json::to_string(record).expect("trace records always serialize");
    writeln!(w, "{line}")
}

/// Read every record from a JSONL stream, failing on the first bad line.
pub fn read_records(r: impl BufRead) -> std::io::Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("trace line {}: {e}", i + 1),
            )
        })?;
        out.push(record);
    }
    Ok(out)
}
