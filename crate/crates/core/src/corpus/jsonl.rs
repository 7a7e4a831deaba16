use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use super::CorpusError;
use crate::dialogue::Conversation;

/// Version stamped into every conversation record.
pub const FORMAT_VERSION: u32 = 1;

/// Writes one conversation per line.
pub fn write_conversations(path: &Path, conversations: &[Conversation]) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for c in conversations {
        let line = serde_json::to_string(c).expect("conversation serialises");
        writeln!(out, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}

pub fn read_conversations(path: &Path) -> Result<Vec<Conversation>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
        match value.get("format_version").and_then(Value::as_u64) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            other => {
                return Err(CorpusError::SchemaVersionMismatch(format!(
                    "line {}: format_version {other:?}, expected {FORMAT_VERSION}",
                    i + 1
                )))
            }
        }
        let conv: Conversation = serde_json::from_value(value)
            .map_err(|e| CorpusError::SchemaVersionMismatch(format!("line {}: {e}", i + 1)))?;
        out.push(conv);
    }
    Ok(out)
}
