use std::cmp::Ordering;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::context::{default_jobs, default_workdir, map_with_db};
use super::{classify_failure, EvalReport, FailureKind};
use crate::corpus::{Cell, DatabaseHandle};
use crate::dialogue::{Conversation, Role, TurnKind};
use crate::provider::{complete_result, Provider, ProviderRequest, Task};
use crate::sqlkit::{execute_all, extract_refs, parse, ResultTable};

/// First fenced code block, else the result tag body, else the longest tail starting at SELECT.
pub fn extract_sql(text: &str) -> Option<String> {
    if let Some(start) = text.find("```") {
        let body = &text[start + 3..];
        let body = body.strip_prefix("sql").or_else(|| body.strip_prefix("SQL")).unwrap_or(body);
        if let Some(end) = body.find("```") {
            let sql = body[..end].trim();
            if !sql.is_empty() {
                return Some(sql.to_string());
            }
        }
    }
    let scope = crate::provider::parse_tagged(text, "result").unwrap_or_else(|_| text.to_string());
    let at = scope.to_ascii_uppercase().find("SELECT")?;
    let sql = scope[at..].trim().trim_end_matches(';').trim();
    (!sql.is_empty()).then(|| sql.to_string())
}

const REL_TOL: f64 = 1e-6;

fn cells_equal(a: &Cell, b: &Cell) -> bool {
    match (a, b) {
        (Cell::Null, Cell::Null) => true,
        (Cell::Text(x), Cell::Text(y)) => x == y,
        (Cell::Integer(_) | Cell::Real(_), Cell::Integer(_) | Cell::Real(_)) => {
            let (x, y) = (a.as_f64().expect("numeric"), b.as_f64().expect("numeric"));
            x == y || (x - y).abs() <= REL_TOL * x.abs().max(y.abs())
        }
        _ => false,
    }
}

fn row_cmp(a: &[Cell], b: &[Cell]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

/// Compares two results; rows as multisets unless `order_sensitive`, columns by position.
pub fn results_match(a: &ResultTable, b: &ResultTable, order_sensitive: bool) -> bool {
    if a.columns.len() != b.columns.len() || a.rows.len() != b.rows.len() {
        return false;
    }
    let mut ra: Vec<&Vec<Cell>> = a.rows.iter().collect();
    let mut rb: Vec<&Vec<Cell>> = b.rows.iter().collect();
    if !order_sensitive {
        ra.sort_by(|x, y| row_cmp(x, y));
        rb.sort_by(|x, y| row_cmp(x, y));
    }
    ra.iter()
        .zip(&rb)
        .all(|(x, y)| x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| cells_equal(p, q)))
}

/// True iff `pred` executes and its rows equal the gold rows as a multiset.
pub fn execution_accuracy(pred_sql: &str, gold_sql: &str, handle: &DatabaseHandle) -> bool {
    execution_accuracy_with(pred_sql, gold_sql, handle, false)
}

pub fn execution_accuracy_with(pred_sql: &str, gold_sql: &str, handle: &DatabaseHandle, order_sensitive: bool) -> bool {
    match (execute_all(handle, pred_sql), execute_all(handle, gold_sql)) {
        (Ok(p), Ok(g)) => results_match(&p, &g, order_sensitive),
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// One prompt straight to SQL.
    #[default]
    Single,
    /// Schema linking first, then SQL conditioned on the links.
    Dinsql,
}

#[derive(Debug, Clone)]
pub struct SqlConfig {
    pub strategy: Strategy,
    /// Give the model only the initial question instead of the clarified conversation.
    pub initial_only: bool,
    pub order_sensitive: bool,
    pub db_dir: PathBuf,
    pub workdir: PathBuf,
    pub jobs: usize,
}

impl SqlConfig {
    pub fn new(db_dir: impl Into<PathBuf>) -> SqlConfig {
        SqlConfig {
            strategy: Strategy::Single,
            initial_only: false,
            order_sensitive: false,
            db_dir: db_dir.into(),
            workdir: default_workdir(),
            jobs: default_jobs(),
        }
    }
}

/// The conversation up to the user turn the SQL must answer.
pub fn prediction_context(conv: &Conversation, initial_only: bool) -> String {
    let last = if initial_only || conv.turn(TurnKind::ClarificationResponse).is_none() {
        TurnKind::InitialQuestion
    } else {
        TurnKind::ClarificationResponse
    };
    let mut out = String::from("<conversation>\n");
    for t in &conv.turns {
        let speaker = if t.role == Role::User { "USER" } else { "DB EXPERT" };
        out.push_str(&format!("{speaker}: {}\n", t.text));
        if t.kind == last {
            break;
        }
    }
    out.push_str("</conversation>");
    out
}

fn gold_links(gold_sql: &str, ctx_schema: &crate::corpus::SchemaDef) -> String {
    let Ok(refs) = parse(gold_sql).map_err(|_| ()).and_then(|t| extract_refs(&t, ctx_schema).map_err(|_| ())) else {
        return String::new();
    };
    let mut lines: Vec<String> = refs.tables.iter().cloned().collect();
    lines.extend(refs.columns.iter().map(|c| c.to_string()));
    lines.join("\n")
}

fn predict(
    conv: &Conversation,
    schema_md: &str,
    schema: &crate::corpus::SchemaDef,
    provider: &dyn Provider,
    config: &SqlConfig,
) -> Result<String, crate::provider::ProviderError> {
    let convo = prediction_context(conv, config.initial_only);
    let mut user = format!("<schema>\n{schema_md}\n</schema>\n\n{convo}");
    if config.strategy == Strategy::Dinsql {
        let link_req = ProviderRequest::new(Task::SchemaLinking, user.clone()).hint("gold_links", gold_links(&conv.gold_sql, schema));
        let links = complete_result(provider, &link_req)?;
        user.push_str(&format!("\n\n<schema_links>\n{}\n</schema_links>", links.trim()));
    }
    let req = ProviderRequest::new(Task::PredictSql, user).hint("gold_sql", conv.gold_sql.clone());
    Ok(provider.complete(&req)?.text)
}

/// Execution accuracy of predicted final SQL, with a failure breakdown for mutated items.
pub fn run_sql_prediction(dataset: &[Conversation], provider: &dyn Provider, config: &SqlConfig) -> EvalReport {
    let store = crate::corpus::DbStore::new(&config.db_dir);
    let outcomes = map_with_db(dataset, &store, &config.workdir, config.jobs, 0, |ctx, conv| {
        let Ok(ctx) = ctx else {
            return (conv.category, false, None, true);
        };
        let text = match predict(conv, &ctx.schema_md, &ctx.schema, provider, config) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("{}: {e}", conv.id);
                return (conv.category, false, None, true);
            }
        };
        let pred = extract_sql(&text);
        let ok = pred
            .as_deref()
            .is_some_and(|p| execution_accuracy_with(p, &conv.gold_sql, &ctx.handle, config.order_sensitive));
        let kind = match (&conv.mutation, ok) {
            (Some(record), false) => Some(match &pred {
                Some(p) => classify_failure(p, &ctx.schema, record),
                None => FailureKind::IncorrectSql,
            }),
            _ => None,
        };
        (conv.category, ok, kind, false)
    });
    let failures = outcomes.iter().filter(|o| o.3).count();
    let mut report = EvalReport::from_outcomes(outcomes.iter().map(|o| (o.0, o.1)));
    report.provider_failures = failures;
    for (cat, _, kind, _) in &outcomes {
        if let Some(k) = kind {
            *report.failure_kinds.entry(*cat).or_default().entry(*k).or_default() += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_order() {
        assert_eq!(extract_sql("blah\n```sql\nSELECT 1\n```\nSELECT 2").as_deref(), Some("SELECT 1"));
        assert_eq!(
            extract_sql("<scratch>think</scratch><result>SELECT name FROM t;</result>").as_deref(),
            Some("SELECT name FROM t")
        );
        assert_eq!(extract_sql("Answer: select a from b").as_deref(), Some("select a from b"));
        assert_eq!(extract_sql("no query here"), None);
    }

    #[test]
    fn numeric_tolerance() {
        let t = |c: Cell| ResultTable {
            columns: vec!["x".into()],
            rows: vec![vec![c]],
            truncated: false,
        };
        assert!(results_match(&t(Cell::Integer(3)), &t(Cell::Real(3.0000000001)), false));
        assert!(!results_match(&t(Cell::Integer(3)), &t(Cell::Text("3".into())), false));
        assert!(!results_match(&t(Cell::Null), &t(Cell::Integer(0)), false));
    }
}
