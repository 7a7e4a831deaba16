use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde_json::Value;

use super::record::{column_key, CategoryLabel, ClarifiedCandidate, Introduced, MutationRecord, Target};
use crate::bench::{render_schema_markdown, sample_values};
use crate::corpus::{
    apply_delta, column_values, quote, Cell, ColType, ColumnDef, ColumnRef, CorpusError, CorpusExample,
    DatabaseHandle, DbDelta, ForeignKey, NewTable, SchemaDef,
};
use crate::provider::{complete_result, parse_py_literal, Provider, ProviderError, ProviderRequest, Task};
use crate::seeding::rng_for;
use crate::sqlkit::ast::Literal;
use crate::sqlkit::{
    execute, extract_refs, parse, render, rewrite, Comparator, ExecError, ExecErrorKind, RefError, RewriteError,
    ResultTable, RewriteSpec, SqlParseError, SqlRefs, SqlTree, WhereAtom,
};

/// Why an example could not be mutated into a category.
#[derive(Debug, thiserror::Error)]
pub enum MutateError {
    #[error("precondition not met: {0}")]
    Precondition(&'static str),
    #[error("gold SQL does not parse: {0}")]
    Parse(#[from] SqlParseError),
    #[error(transparent)]
    Refs(#[from] RefError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("unusable provider output: {0}")]
    BadProviderOutput(String),
    #[error("provider returned the question unchanged")]
    TrivialRewrite,
    #[error("no substitute column")]
    NoSubstituteColumn,
    #[error("no corpus SQL matches")]
    NoMatchingSql,
    #[error("no alternate value")]
    NoAlternateValue,
    #[error("insufficient rows: {0}")]
    InsufficientRows(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("candidate does not execute: {0}")]
    Exec(#[from] ExecError),
    #[error("postcondition failed: {0}")]
    Postcondition(String),
}

/// One example and the working database copy it is mutated on.
#[derive(Clone, Copy)]
pub struct MutationInput<'a> {
    pub example: &'a CorpusExample,
    /// Schema of `db` before mutation.
    pub schema: &'a SchemaDef,
    pub db: &'a DatabaseHandle,
    pub seed: u64,
}

struct Seed {
    tree: SqlTree,
    refs: SqlRefs,
}

impl<'a> MutationInput<'a> {
    fn analyse(&self) -> Result<Seed, MutateError> {
        let tree = parse(&self.example.gold_sql)?;
        let refs = extract_refs(&tree, self.schema)?;
        Ok(Seed { tree, refs })
    }

    fn record(&self, category: CategoryLabel) -> MutationRecord {
        MutationRecord {
            category,
            seed_example_id: self.example.example_id.clone(),
            seed_question: self.example.question.clone(),
            seed_sql: self.example.gold_sql.clone(),
            target: None,
            introduced: Vec::new(),
            mutated_question: self.example.question.clone(),
            removed: Vec::new(),
            added: Vec::new(),
            value_map: BTreeMap::new(),
            deltas: Vec::new(),
            clarified_sql_candidates: Vec::new(),
            fixed_clarification: None,
            join_tables: Vec::new(),
        }
    }

    fn schema_block(&self) -> Result<String, MutateError> {
        let samples = sample_values(self.db, self.schema, 3)?;
        Ok(format!("<schema>\n{}</schema>", render_schema_markdown(self.schema, &samples)))
    }

    fn request(&self, task: Task, body: String) -> ProviderRequest {
        ProviderRequest::new(task, body)
            .hint("db_id", self.schema.db_id.clone())
            .hint("question", self.example.question.clone())
            .hint("sql", self.example.gold_sql.clone())
    }

    fn apply(&self, deltas: &[DbDelta]) -> Result<SchemaDef, MutateError> {
        let mut schema = self.schema.clone();
        for d in deltas {
            schema = apply_delta(self.db, d)?;
        }
        Ok(schema)
    }
}

pub(crate) fn literal_cell(lit: &Literal) -> Option<Cell> {
    match lit {
        Literal::Number(raw) => raw
            .parse::<i64>()
            .map(Cell::Integer)
            .ok()
            .or_else(|| raw.parse::<f64>().ok().map(Cell::Real)),
        Literal::String(s) => Some(Cell::Text(s.clone())),
        Literal::Null => None,
    }
}

pub(crate) fn cell_literal(cell: &Cell) -> Literal {
    match cell {
        Cell::Null => Literal::Null,
        Cell::Integer(i) => Literal::Number(i.to_string()),
        Cell::Real(f) => Literal::Number(f.to_string()),
        Cell::Text(s) => Literal::String(s.clone()),
    }
}

fn literal_text(lit: &Literal) -> String {
    match lit {
        Literal::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Rows of `col` equal to `value` under SQLite comparison rules.
pub(crate) fn count_matching(db: &DatabaseHandle, col: &ColumnRef, value: &Cell) -> Result<i64, CorpusError> {
    let sql = format!(
        "SELECT count(*) FROM {} WHERE {} = ?1",
        quote(&col.table),
        quote(&col.column)
    );
    Ok(db.connection().query_row(&sql, [value], |r| r.get(0))?)
}

/// True when a query's answer carries nothing: no rows, or a lone row of
/// zero/NULL aggregates from an ungrouped aggregate-only SELECT.
pub fn empty_answer(sql: &str, result: &ResultTable) -> bool {
    if result.rows.is_empty() {
        return true;
    }
    let Ok(tree) = parse(sql) else { return false };
    let [select] = tree.selects()[..] else { return false };
    let aggregate_only = !tree.has_set_op()
        && select.group_by.is_empty()
        && select.projection.iter().all(|p| p.expr.is_aggregate_call());
    aggregate_only
        && result.rows.len() == 1
        && result.rows[0]
            .iter()
            .all(|c| matches!(c, Cell::Null) || matches!(c, Cell::Integer(0)) || matches!(c, Cell::Real(f) if *f == 0.0))
}

/// Literal for `cell` shaped like `like`: numeric text stays a number when the original was one.
fn literal_like(cell: &Cell, like: &Literal) -> Literal {
    match (cell, like) {
        (Cell::Text(t), Literal::Number(_)) if t.trim().parse::<f64>().is_ok() => Literal::Number(t.trim().to_string()),
        _ => cell_literal(cell),
    }
}

fn perturb(cell: &Cell) -> Cell {
    match cell {
        Cell::Integer(i) => Cell::Integer((*i as f64 * 1.1).round() as i64),
        Cell::Real(f) => Cell::Real((f * 1.1 * 100.0).round() / 100.0),
        other => other.clone(),
    }
}

fn same_name(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

fn substituted(tree: &SqlTree, schema: &SchemaDef, spec: RewriteSpec) -> Result<String, MutateError> {
    Ok(render(&rewrite(tree, schema, &spec)?))
}

/// First column of `cols` that is not a key, skipping `*`.
fn first_non_key<'c>(schema: &SchemaDef, cols: impl IntoIterator<Item = &'c ColumnRef>) -> Option<ColumnRef> {
    cols.into_iter()
        .find(|c| c.column != "*" && !schema.is_key(c) && schema.has_column(c))
        .and_then(|c| schema.canonical(c))
}

fn synonym_columns(
    input: &MutationInput<'_>,
    provider: &dyn Provider,
    col: &ColumnRef,
) -> Result<(ColumnRef, ColumnRef), MutateError> {
    let body = format!(
        "{}\n<column>{}.{}</column>\n<question>{}</question>\n<sql>{}</sql>",
        input.schema_block()?,
        col.table,
        col.column,
        input.example.question,
        input.example.gold_sql
    );
    let req = input
        .request(Task::SynonymColumns, body)
        .hint("table", col.table.clone())
        .hint("column", col.column.clone());
    let text = complete_result(provider, &req)?;
    let value = parse_py_literal(&text).map_err(|e| MutateError::BadProviderOutput(e.to_string()))?;
    let names: Vec<String> = value
        .as_array()
        .ok_or_else(|| MutateError::BadProviderOutput("synonyms are not a list".into()))?
        .iter()
        .filter_map(|item| match item {
            Value::Object(m) => m.get("column").and_then(Value::as_str).map(str::to_string),
            Value::String(s) => Some(s.clone()),
            _ => None,
        })
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    match names.as_slice() {
        [] => Err(ProviderError::Refusal("empty synonym list".into()).into()),
        [a, b, ..] if !same_name(a, b) && !same_name(a, &col.column) && !same_name(b, &col.column) => Ok((
            ColumnRef::new(col.table.clone(), a.clone()),
            ColumnRef::new(col.table.clone(), b.clone()),
        )),
        _ => Err(MutateError::BadProviderOutput(format!("need two distinct new names, got {names:?}"))),
    }
}

/// Deltas that replace `col` with two copies named `c1` and `c2`.
fn split_column(
    input: &MutationInput<'_>,
    col: &ColumnRef,
    c1: &ColumnRef,
    c2: &ColumnRef,
    keep: Option<&Cell>,
) -> Result<Vec<DbDelta>, MutateError> {
    let col_type = input.schema.column_type(col).unwrap_or(ColType::Text);
    let values = column_values(input.db, col)?;
    let second: Vec<Cell> = if col_type == ColType::Number {
        values
            .iter()
            .map(|v| match keep {
                Some(k) if cells_equal(v, k) => v.clone(),
                _ => perturb(v),
            })
            .collect()
    } else {
        values.clone()
    };
    Ok(vec![
        DbDelta::AddColumn {
            column: c1.clone(),
            col_type,
            values,
        },
        DbDelta::AddColumn {
            column: c2.clone(),
            col_type,
            values: second,
        },
        DbDelta::RemoveColumn { column: col.clone() },
    ])
}

fn cells_equal(a: &Cell, b: &Cell) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

fn check_unknown_column(db: &DatabaseHandle, sql: &str) -> Result<(), MutateError> {
    match execute(db, sql) {
        Err(e) if e.kind == ExecErrorKind::UnknownColumn => Ok(()),
        Err(e) => Err(MutateError::Postcondition(format!("original SQL fails with {:?}", e.kind))),
        Ok(_) => Err(MutateError::Postcondition("original SQL still executes".into())),
    }
}

/// Replaces a projected column with two synonyms so the output column is ambiguous.
pub fn mutate_ambiguous_select(input: MutationInput<'_>, provider: &dyn Provider) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let col = first_non_key(input.schema, &seed.refs.select_columns)
        .ok_or(MutateError::Precondition("no non-key column in SELECT"))?;
    let (c1, c2) = synonym_columns(&input, provider, &col)?;
    let deltas = split_column(&input, &col, &c1, &c2, None)?;
    input.apply(&deltas)?;
    let mut rec = input.record(CategoryLabel::AmbiguousSelectColumn);
    for c in [&c1, &c2] {
        let sql = substituted(
            &seed.tree,
            input.schema,
            RewriteSpec::SubstituteColumn {
                old: col.clone(),
                new: c.clone(),
            },
        )?;
        execute(input.db, &sql)?;
        rec.clarified_sql_candidates.push(ClarifiedCandidate::new(sql, c.column.clone()));
        rec.introduced.push(Introduced::Column(c.clone()));
        rec.added.push(c.clone());
    }
    check_unknown_column(input.db, &input.example.gold_sql)?;
    rec.target = Some(Target {
        column: col.clone(),
        value: None,
    });
    rec.removed.push(col);
    rec.deltas = deltas;
    Ok(rec)
}

fn equality_atoms(refs: &SqlRefs) -> impl Iterator<Item = &WhereAtom> {
    refs.where_atoms
        .iter()
        .filter(|a| a.comparator == Comparator::Eq && a.value != Literal::Null)
}

/// Replaces a WHERE column with two synonyms that both hold the filter value.
pub fn mutate_ambiguous_where(input: MutationInput<'_>, provider: &dyn Provider) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let mut chosen = None;
    for atom in equality_atoms(&seed.refs) {
        if input.schema.is_key(&atom.column) {
            continue;
        }
        let (Some(col), Some(v)) = (input.schema.canonical(&atom.column), literal_cell(&atom.value)) else {
            continue;
        };
        if count_matching(input.db, &col, &v)? > 0 {
            chosen = Some((col, v));
            break;
        }
    }
    let (col, v) = chosen.ok_or(MutateError::Precondition("no equality filter on a non-key column with a present value"))?;
    let (c1, c2) = synonym_columns(&input, provider, &col)?;
    let deltas = split_column(&input, &col, &c1, &c2, Some(&v))?;
    input.apply(&deltas)?;
    let mut rec = input.record(CategoryLabel::AmbiguousWhereColumn);
    for c in [&c1, &c2] {
        if count_matching(input.db, c, &v)? == 0 {
            return Err(MutateError::Postcondition(format!("{c} does not hold {v}")));
        }
        let sql = substituted(
            &seed.tree,
            input.schema,
            RewriteSpec::SubstituteColumn {
                old: col.clone(),
                new: c.clone(),
            },
        )?;
        execute(input.db, &sql)?;
        rec.clarified_sql_candidates.push(ClarifiedCandidate::new(sql, c.column.clone()));
        rec.introduced.push(Introduced::Column(c.clone()));
        rec.added.push(c.clone());
        rec.value_map.insert(column_key(c), vec![v.clone()]);
    }
    check_unknown_column(input.db, &input.example.gold_sql)?;
    rec.target = Some(Target {
        column: col.clone(),
        value: Some(v),
    });
    rec.removed.push(col);
    rec.deltas = deltas;
    Ok(rec)
}

/// Splits a filtered text value into two similar values.
pub fn mutate_ambiguous_values(input: MutationInput<'_>, provider: &dyn Provider) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let mut chosen = None;
    for atom in equality_atoms(&seed.refs) {
        let Literal::String(text) = &atom.value else { continue };
        if input.schema.is_key(&atom.column) {
            continue;
        }
        let Some(col) = input.schema.canonical(&atom.column) else { continue };
        let v = Cell::Text(text.clone());
        if count_matching(input.db, &col, &v)? > 0 {
            chosen = Some((col, atom.value.clone(), v));
            break;
        }
    }
    let (col, lit, v) = chosen.ok_or(MutateError::Precondition("no equality filter on a present text value"))?;
    let body = format!(
        "{}\n<value>{}: {}</value>\n<question>{}</question>\n<sql>{}</sql>",
        input.schema_block()?,
        col,
        v,
        input.example.question,
        input.example.gold_sql
    );
    let req = input
        .request(Task::SimilarValues, body)
        .hint("column", col.to_string())
        .hint("value", v.to_string());
    let text = complete_result(provider, &req)?;
    let parsed = parse_py_literal(&text).map_err(|e| MutateError::BadProviderOutput(e.to_string()))?;
    let values: Vec<String> = parsed
        .as_array()
        .map(|items| {
            items
                .iter()
                .filter_map(|i| match i {
                    Value::String(s) => Some(s.trim().to_string()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => None,
                })
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default();
    let (v1, v2) = match values.as_slice() {
        [] => return Err(ProviderError::Refusal("no similar values".into()).into()),
        [a, b, ..] if a != b && a != text_of(&v) && b != text_of(&v) => (Cell::Text(a.clone()), Cell::Text(b.clone())),
        _ => return Err(MutateError::BadProviderOutput(format!("need two new values, got {values:?}"))),
    };
    let deltas = vec![DbDelta::ReplaceCellValues {
        column: col.clone(),
        old_value: v.clone(),
        new_values: vec![v1.clone(), v2.clone()],
    }];
    input.apply(&deltas)?;
    if count_matching(input.db, &col, &v)? != 0 {
        return Err(MutateError::Postcondition(format!("{v} still present")));
    }
    let mut rec = input.record(CategoryLabel::AmbiguousValuesWithinColumn);
    for new in [&v1, &v2] {
        let sql = substituted(
            &seed.tree,
            input.schema,
            RewriteSpec::SubstituteLiteral {
                old: lit.clone(),
                new: cell_literal(new),
                column: Some(col.clone()),
            },
        )?;
        let result = execute(input.db, &sql)?;
        if result.rows.is_empty() || count_matching(input.db, &col, new)? == 0 {
            return Err(MutateError::InsufficientRows(format!("{new} selects no rows")));
        }
        rec.clarified_sql_candidates.push(ClarifiedCandidate::new(sql, new.to_string()));
        rec.introduced.push(Introduced::Value(new.clone()));
    }
    rec.value_map.insert(column_key(&col), vec![v1, v2]);
    rec.target = Some(Target { column: col, value: Some(v) });
    rec.deltas = deltas;
    Ok(rec)
}

fn text_of(c: &Cell) -> &str {
    c.as_text().unwrap_or("")
}

fn normalise(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Rewrites the question so a filter value is described rather than stated.
pub fn mutate_ambiguous_filter_criteria(
    input: MutationInput<'_>,
    provider: &dyn Provider,
) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let atom = seed
        .refs
        .where_atoms
        .iter()
        .find(|a| a.value != Literal::Null && a.comparator != Comparator::In)
        .ok_or(MutateError::Precondition("no filter literal"))?;
    let value = literal_text(&atom.value);
    let body = format!(
        "{}\n<question>{}</question>\n<sql>{}</sql>\n<value>{}</value>",
        input.schema_block()?,
        input.example.question,
        input.example.gold_sql,
        value
    );
    let req = input.request(Task::VaguifyQuestion, body).hint("value", value.clone());
    let vague = complete_result(provider, &req)?;
    if vague.is_empty() {
        return Err(ProviderError::Refusal("no vague rewrite".into()).into());
    }
    if normalise(&vague) == normalise(&input.example.question) {
        return Err(MutateError::TrivialRewrite);
    }
    if normalise(&vague).contains(&normalise(&value)) {
        return Err(MutateError::BadProviderOutput("rewrite still states the value".into()));
    }
    let mut rec = input.record(CategoryLabel::AmbiguousFilterCriteria);
    rec.mutated_question = vague;
    let target = if normalise(&input.example.question).contains(&normalise(&value)) {
        value
    } else {
        String::new()
    };
    execute(input.db, &input.example.gold_sql)?;
    rec.clarified_sql_candidates
        .push(ClarifiedCandidate::new(input.example.gold_sql.clone(), target));
    rec.fixed_clarification = Some(input.example.question.clone());
    let column = input.schema.canonical(&atom.column).unwrap_or_else(|| atom.column.clone());
    if let Some(v) = literal_cell(&atom.value) {
        rec.value_map.insert(column_key(&column), vec![v.clone()]);
        rec.target = Some(Target { column, value: Some(v) });
    } else {
        rec.target = Some(Target { column, value: None });
    }
    Ok(rec)
}

/// Removes a projected column; the clarified SQL asks for a neighbouring column instead.
pub fn mutate_nonexistent_select(input: MutationInput<'_>) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let col = first_non_key(input.schema, &seed.refs.select_columns)
        .ok_or(MutateError::Precondition("no non-key column in SELECT"))?;
    let table = input.schema.table(&col.table).expect("canonical column has a table");
    let eligible: Vec<(ColumnRef, ColType)> = table
        .columns
        .iter()
        .map(|c| (ColumnRef::new(table.name.clone(), c.name.clone()), c.col_type))
        .filter(|(c, _)| c != &col && !input.schema.is_key(c) && !seed.refs.select_columns.contains(c))
        .collect();
    let substitute = eligible
        .iter()
        .find(|(_, t)| *t == ColType::Text)
        .or_else(|| eligible.first())
        .map(|(c, _)| c.clone())
        .ok_or(MutateError::NoSubstituteColumn)?;
    let sql = substituted(
        &seed.tree,
        input.schema,
        RewriteSpec::SubstituteColumn {
            old: col.clone(),
            new: substitute.clone(),
        },
    )?;
    let deltas = vec![DbDelta::RemoveColumn { column: col.clone() }];
    input.apply(&deltas)?;
    check_unknown_column(input.db, &input.example.gold_sql)?;
    execute(input.db, &sql)?;
    let mut rec = input.record(CategoryLabel::NonexistentSelectColumn);
    rec.clarified_sql_candidates
        .push(ClarifiedCandidate::new(sql, substitute.column.clone()));
    rec.target = Some(Target {
        column: col.clone(),
        value: None,
    });
    rec.removed.push(col);
    rec.deltas = deltas;
    Ok(rec)
}

fn column_set(cols: &[ColumnRef]) -> BTreeSet<ColumnRef> {
    cols.iter().cloned().collect()
}

/// Removes a filter column; the clarified SQL is another corpus query on the
/// same database with the same output columns and surviving filters.
pub fn mutate_nonexistent_where(
    input: MutationInput<'_>,
    corpus: &[CorpusExample],
) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let wanted = column_set(&seed.refs.select_columns);
    let mut chosen = None;
    'columns: for col in &seed.refs.where_columns {
        if input.schema.is_key(col) || !input.schema.has_column(col) {
            continue;
        }
        for other in corpus {
            if other.db_id != input.example.db_id
                || other.example_id == input.example.example_id
                || normalise(&other.gold_sql) == normalise(&input.example.gold_sql)
            {
                continue;
            }
            let Ok(tree) = parse(&other.gold_sql) else { continue };
            let Ok(refs) = extract_refs(&tree, input.schema) else { continue };
            if column_set(&refs.select_columns) == wanted
                && !refs.where_columns.is_empty()
                && !refs.columns.contains(col)
                && refs.unresolved.is_empty()
            {
                chosen = Some((input.schema.canonical(col).expect("has column"), other, refs));
                break 'columns;
            }
        }
    }
    let (col, other, refs) = chosen.ok_or(MutateError::NoMatchingSql)?;
    let deltas = vec![DbDelta::RemoveColumn { column: col.clone() }];
    input.apply(&deltas)?;
    check_unknown_column(input.db, &input.example.gold_sql)?;
    execute(input.db, &other.gold_sql)?;
    let mut rec = input.record(CategoryLabel::NonexistentWhereColumn);
    let question = normalise(&other.question);
    let target = refs
        .where_atoms
        .iter()
        .map(|a| literal_text(&a.value))
        .find(|v| !v.is_empty() && question.contains(&normalise(v)))
        .unwrap_or_default();
    rec.clarified_sql_candidates.push(ClarifiedCandidate {
        sql: other.gold_sql.clone(),
        target,
        question: Some(other.question.clone()),
    });
    rec.target = Some(Target {
        column: col.clone(),
        value: None,
    });
    rec.removed.push(col);
    rec.deltas = deltas;
    Ok(rec)
}

/// Deletes the rows holding a filtered value; the clarified SQL asks about a surviving value.
pub fn mutate_nonexistent_filter_value(input: MutationInput<'_>) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let mut chosen = None;
    for atom in equality_atoms(&seed.refs) {
        if input.schema.is_key(&atom.column) {
            continue;
        }
        let (Some(col), Some(v)) = (input.schema.canonical(&atom.column), literal_cell(&atom.value)) else {
            continue;
        };
        if count_matching(input.db, &col, &v)? > 0 {
            chosen = Some((col, atom.value.clone(), v));
            break;
        }
    }
    let (col, lit, v) = chosen.ok_or(MutateError::Precondition("no equality filter on a present value"))?;
    let mut alternates: Vec<Cell> = Vec::new();
    for c in column_values(input.db, &col)? {
        if !c.is_null() && !cells_equal(&c, &v) && !alternates.iter().any(|a| cells_equal(a, &c)) {
            alternates.push(c);
        }
    }
    if alternates.is_empty() {
        return Err(MutateError::NoAlternateValue);
    }
    let deltas = vec![DbDelta::DeleteRowsByValue {
        column: col.clone(),
        value: v.clone(),
    }];
    input.apply(&deltas)?;
    if count_matching(input.db, &col, &v)? != 0 {
        return Err(MutateError::Postcondition(format!("{v} still present")));
    }
    let after = execute(input.db, &input.example.gold_sql)?;
    if !empty_answer(&input.example.gold_sql, &after) {
        return Err(MutateError::Postcondition("gold SQL still has an answer".into()));
    }
    let mut order = alternates.clone();
    order.shuffle(&mut rng_for(input.seed, &[&input.example.example_id, "nx-value"]));
    let mut picked = None;
    for alt in order.iter().take(20) {
        let sql = substituted(
            &seed.tree,
            input.schema,
            RewriteSpec::SubstituteLiteral {
                old: lit.clone(),
                new: literal_like(alt, &lit),
                column: Some(col.clone()),
            },
        )?;
        match execute(input.db, &sql) {
            Ok(r) if !r.rows.is_empty() && count_matching(input.db, &col, alt)? > 0 => {
                picked = Some((alt.clone(), sql));
                break;
            }
            _ => continue,
        }
    }
    let (alt, sql) = picked.ok_or(MutateError::NoAlternateValue)?;
    let mut rec = input.record(CategoryLabel::NonexistentFilterValue);
    rec.clarified_sql_candidates.push(ClarifiedCandidate::new(sql, alt.to_string()));
    let mut shown: Vec<Cell> = vec![alt.clone()];
    shown.extend(alternates.into_iter().filter(|a| !cells_equal(a, &alt)).take(19));
    rec.value_map.insert(column_key(&col), shown);
    rec.target = Some(Target {
        column: col,
        value: Some(v),
    });
    rec.deltas = deltas;
    Ok(rec)
}

fn json_cell(v: &Value) -> Cell {
    match v {
        Value::Null => Cell::Null,
        Value::Bool(b) => Cell::Integer(*b as i64),
        Value::Number(n) => n
            .as_i64()
            .map(Cell::Integer)
            .unwrap_or_else(|| Cell::Real(n.as_f64().unwrap_or(0.0))),
        Value::String(s) => Cell::Text(s.clone()),
        other => Cell::Text(other.to_string()),
    }
}

fn new_tables(value: &Value) -> Result<Vec<NewTable>, MutateError> {
    let bad = |m: &str| MutateError::BadProviderOutput(m.to_string());
    let items = value["tables"].as_array().ok_or_else(|| bad("no table list"))?;
    let mut out = Vec::new();
    for t in items {
        let name = t["name"].as_str().ok_or_else(|| bad("table without name"))?.to_string();
        let columns = t["columns"]
            .as_array()
            .ok_or_else(|| bad("table without columns"))?
            .iter()
            .map(|c| {
                let cname = c["name"].as_str().or_else(|| c.as_str()).ok_or_else(|| bad("column without name"))?;
                Ok(ColumnDef {
                    name: cname.to_string(),
                    col_type: ColType::from_catalog(c["type"].as_str().unwrap_or("text")),
                })
            })
            .collect::<Result<Vec<_>, MutateError>>()?;
        let foreign_keys = t["foreign_keys"]
            .as_array()
            .map(|fks| {
                fks.iter()
                    .filter_map(|fk| {
                        Some(ForeignKey {
                            from: ColumnRef::new(name.clone(), fk["column"].as_str()?),
                            to: ColumnRef::new(fk["ref_table"].as_str()?, fk["ref_column"].as_str()?),
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        let rows = t["rows"]
            .as_array()
            .map(|rows| {
                rows.iter()
                    .filter_map(Value::as_array)
                    .map(|r| r.iter().map(json_cell).collect())
                    .collect()
            })
            .unwrap_or_default();
        out.push(NewTable {
            name,
            columns,
            primary_key: t["primary_key"].as_str().map(str::to_string),
            foreign_keys,
            rows,
        });
    }
    Ok(out)
}

fn mentions(question: &str, name: &str) -> bool {
    let q = normalise(&question.replace('_', " "));
    q.contains(&normalise(&name.replace('_', " ")))
}

/// Adds tables that are disconnected from the schema and a question that would need to join them.
pub fn mutate_unsupported_join(input: MutationInput<'_>, provider: &dyn Provider) -> Result<MutationRecord, MutateError> {
    let seed = input.analyse()?;
    let anchor = seed
        .refs
        .tables
        .iter()
        .next()
        .and_then(|t| input.schema.table(t))
        .map(|t| t.name.clone())
        .ok_or(MutateError::Precondition("gold SQL names no table"))?;
    let body = input.schema_block()?;
    let req = input.request(Task::DisconnectedTables, body).hint("anchor_table", anchor.clone());
    let text = complete_result(provider, &req)?;
    let value = parse_py_literal(&text).map_err(|e| MutateError::BadProviderOutput(e.to_string()))?;
    if value.as_object().is_none_or(|m| m.is_empty()) {
        return Err(ProviderError::Refusal("no disconnected tables".into()).into());
    }
    let tables = new_tables(&value)?;
    if tables.len() < 2 {
        return Err(MutateError::BadProviderOutput("fewer than two tables".into()));
    }
    let question = value["question"].as_str().unwrap_or("").trim().to_string();
    if question.is_empty() || normalise(&question) == normalise(&input.example.question) {
        return Err(MutateError::BadProviderOutput("no new question".into()));
    }
    let before = input.schema.fk_components();
    let deltas = vec![DbDelta::CreateTables { tables: tables.clone() }];
    let after_schema = input.apply(&deltas)?;
    if after_schema.fk_components() <= before {
        return Err(MutateError::Postcondition("foreign-key graph did not split".into()));
    }
    execute(input.db, &input.example.gold_sql)?;
    let names: Vec<String> = tables.iter().map(|t| t.name.clone()).collect();
    let given: Vec<&str> = value["joins"]
        .as_array()
        .map(|j| j.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default();
    let new_side = given
        .iter()
        .find(|g| names.iter().any(|n| same_name(n, g)))
        .map(|s| s.to_string())
        .or_else(|| names.iter().find(|n| mentions(&question, n)).cloned())
        .unwrap_or_else(|| names[0].clone());
    let old_side = given
        .iter()
        .find_map(|g| input.schema.table(g).map(|t| t.name.clone()))
        .or_else(|| {
            input
                .schema
                .tables
                .iter()
                .find(|t| mentions(&question, &t.name))
                .map(|t| t.name.clone())
        })
        .unwrap_or(anchor);
    let mut rec = input.record(CategoryLabel::UnsupportedJoin);
    rec.mutated_question = question;
    rec.clarified_sql_candidates
        .push(ClarifiedCandidate::new(input.example.gold_sql.clone(), ""));
    rec.fixed_clarification = Some(input.example.question.clone());
    rec.introduced = names.into_iter().map(Introduced::Table).collect();
    rec.join_tables = vec![new_side, old_side];
    rec.deltas = deltas;
    Ok(rec)
}

/// Runs the operator for `category`.
pub fn mutate(
    category: CategoryLabel,
    input: MutationInput<'_>,
    provider: &dyn Provider,
    corpus: &[CorpusExample],
) -> Result<MutationRecord, MutateError> {
    let rec = match category {
        CategoryLabel::AmbiguousSelectColumn => mutate_ambiguous_select(input, provider),
        CategoryLabel::AmbiguousWhereColumn => mutate_ambiguous_where(input, provider),
        CategoryLabel::AmbiguousValuesWithinColumn => mutate_ambiguous_values(input, provider),
        CategoryLabel::AmbiguousFilterCriteria => mutate_ambiguous_filter_criteria(input, provider),
        CategoryLabel::NonexistentSelectColumn => mutate_nonexistent_select(input),
        CategoryLabel::NonexistentWhereColumn => mutate_nonexistent_where(input, corpus),
        CategoryLabel::NonexistentFilterValue => mutate_nonexistent_filter_value(input),
        CategoryLabel::UnsupportedJoin => mutate_unsupported_join(input, provider),
        CategoryLabel::Answerable => Err(MutateError::Precondition("answerable examples are not mutated")),
    }?;
    rec.check_shape().map_err(MutateError::Postcondition)?;
    Ok(rec)
}
