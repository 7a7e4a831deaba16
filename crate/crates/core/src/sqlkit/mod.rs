//! SQL parsing, analysis, rewriting, rendering and execution.
//!
//! The grammar covers the Spider gold-query surface: single and compound
//! SELECT statements with joins, aggregates, GROUP BY / HAVING, ORDER BY /
//! LIMIT, IN / NOT IN subqueries and set operations. Anything outside it is a
//! [`SqlParseError`] so callers can skip the example with a diagnostic.

pub mod ast;
mod exec;
mod lexer;
mod parser;
mod refs;
mod render;
mod rewrite;
pub(crate) mod walk;

pub use ast::Query as SqlTree;
pub use exec::{execute, execute_all, ExecError, ExecErrorKind, ResultTable, MAX_SHOWN_ROWS};
pub use parser::{is_reserved, parse};
pub use refs::{extract_refs, Comparator, RefError, SqlRefs, WhereAtom};
pub use render::{quote_ident, render, render_expr};
pub use rewrite::{rewrite, RewriteError, RewriteSpec};

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SqlParseError {
    /// Byte offset into the input where parsing failed.
    pub offset: usize,
    pub message: String,
}

impl SqlParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        SqlParseError {
            offset,
            message: message.into(),
        }
    }
}

impl fmt::Display for SqlParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.offset, self.message)
    }
}

/// Parses and re-renders `sql` in canonical form.
pub fn normalize(sql: &str) -> Result<String, SqlParseError> {
    parse(sql).map(|t| render(&t))
}
