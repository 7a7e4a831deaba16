use serde::{Deserialize, Serialize};

use crate::corpus::SchemaDef;
use crate::mutator::{CategoryLabel, MutationRecord};
use crate::sqlkit::{extract_refs, parse};

/// Why a predicted SQL missed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureKind {
    /// Uses a column the mutated schema does not have.
    Hallucination,
    IncorrectSql,
    /// Picked one of the candidate columns of an ambiguous column.
    PartiallyCorrect,
}

/// Buckets a wrong prediction against the mutated schema.
pub fn classify_failure(pred_sql: &str, mutated_schema: &SchemaDef, record: &MutationRecord) -> FailureKind {
    let Ok(tree) = parse(pred_sql) else {
        return FailureKind::IncorrectSql;
    };
    let refs = match extract_refs(&tree, mutated_schema) {
        Ok(r) => r,
        Err(_) => return FailureKind::Hallucination,
    };
    if !refs.unresolved.is_empty() || refs.columns.iter().any(|c| !mutated_schema.has_column(c)) {
        return FailureKind::Hallucination;
    }
    let ambiguous_column = matches!(
        record.category,
        CategoryLabel::AmbiguousSelectColumn | CategoryLabel::AmbiguousWhereColumn
    );
    let candidates = record.introduced_columns();
    if ambiguous_column && refs.columns.iter().any(|c| candidates.contains(&c)) {
        return FailureKind::PartiallyCorrect;
    }
    FailureKind::IncorrectSql
}
