use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{Cell, DatabaseHandle};

/// Rows kept in a displayed result.
pub const MAX_SHOWN_ROWS: usize = 30;

const QUERY_TIME_LIMIT: Duration = Duration::from_secs(20);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub truncated: bool,
}

impl ResultTable {
    /// Copy capped at [`MAX_SHOWN_ROWS`].
    pub fn shown(&self) -> ResultTable {
        if self.rows.len() <= MAX_SHOWN_ROWS {
            return self.clone();
        }
        ResultTable {
            columns: self.columns.clone(),
            rows: self.rows[..MAX_SHOWN_ROWS].to_vec(),
            truncated: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecErrorKind {
    SyntaxError,
    UnknownColumn,
    UnknownTable,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub message: String,
}

#[derive(Deserialize)]
struct PatternFile {
    #[allow(dead_code)]
    version: u32,
    patterns: Vec<Pattern>,
}

#[derive(Deserialize)]
struct Pattern {
    contains: String,
    kind: ExecErrorKind,
}

fn patterns() -> &'static [Pattern] {
    static PATTERNS: OnceLock<Vec<Pattern>> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let file: PatternFile = serde_json::from_str(include_str!("../../fixtures/exec_error_patterns.json"))
            .expect("bundled error pattern fixture is valid");
        file.patterns
    })
}

pub(crate) fn classify(message: &str) -> ExecErrorKind {
    let lower = message.to_lowercase();
    patterns()
        .iter()
        .find(|p| lower.contains(&p.contains))
        .map(|p| p.kind)
        .unwrap_or(ExecErrorKind::Other)
}

fn error(message: impl Into<String>) -> ExecError {
    let message = message.into();
    ExecError {
        kind: classify(&message),
        message,
    }
}

/// Runs a read-only query and returns at most [`MAX_SHOWN_ROWS`] rows.
pub fn execute(handle: &DatabaseHandle, sql: &str) -> Result<ResultTable, ExecError> {
    execute_all(handle, sql).map(|t| t.shown())
}

/// Runs a read-only query and returns every row.
pub fn execute_all(handle: &DatabaseHandle, sql: &str) -> Result<ResultTable, ExecError> {
    let conn = handle.connection();
    let mut stmt = conn.prepare(sql).map_err(|e| error(e.to_string()))?;
    if !stmt.readonly() {
        return Err(ExecError {
            kind: ExecErrorKind::Other,
            message: "statement is not read-only".into(),
        });
    }
    let columns: Vec<String> = stmt.column_names().into_iter().map(String::from).collect();
    let width = columns.len();
    let deadline = Instant::now() + QUERY_TIME_LIMIT;
    let _ = conn.progress_handler(10_000, Some(move || Instant::now() > deadline));
    let result = (|| {
        let mut rows = Vec::new();
        let mut cursor = stmt.query([])?;
        while let Some(row) = cursor.next()? {
            let mut cells = Vec::with_capacity(width);
            for i in 0..width {
                cells.push(Cell::from_value_ref(row.get_ref(i)?));
            }
            rows.push(cells);
        }
        Ok::<_, rusqlite::Error>(rows)
    })();
    let _ = conn.progress_handler(0, None::<fn() -> bool>);
    let rows = result.map_err(|e| error(e.to_string()))?;
    Ok(ResultTable {
        columns,
        rows,
        truncated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_messages_classify() {
        assert_eq!(classify("no such column: Capacity"), ExecErrorKind::UnknownColumn);
        assert_eq!(classify("no such table: foo"), ExecErrorKind::UnknownTable);
        assert_eq!(classify("near \"FROM\": syntax error"), ExecErrorKind::SyntaxError);
        assert_eq!(classify("database is locked"), ExecErrorKind::Other);
    }
}
