use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use serde::Deserialize;

use super::{Conversation, Provenance, Turn, TurnKind};
use crate::bench::{render_schema_markdown, sample_values};
use crate::corpus::{introspect, ColumnRef, CorpusError, CorpusExample, DatabaseHandle, SchemaDef};
use crate::mutator::{CategoryLabel, ClarifiedCandidate, MutationRecord};
use crate::provider::{complete_result, Provider, ProviderError, ProviderRequest, Task};
use crate::seeding::rng_for;
use crate::sqlkit::{execute, parse, render, rewrite, ExecError, ResultTable, RewriteError, RewriteSpec, SqlParseError};

#[derive(Debug, thiserror::Error)]
pub enum DialogueError {
    #[error("no clarified candidate executes")]
    NoExecutableCandidate,
    #[error("clarification rejected: {0}")]
    FilterReject(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Parse(#[from] SqlParseError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("precondition not met: {0}")]
    Precondition(&'static str),
}

#[derive(Deserialize)]
struct Templates {
    #[allow(dead_code)]
    version: u32,
    clarification_request: BTreeMap<String, String>,
    final_sql: String,
    helpful_sql: String,
    row_count_fallback: String,
}

fn templates() -> &'static Templates {
    static T: OnceLock<Templates> = OnceLock::new();
    T.get_or_init(|| serde_json::from_str(include_str!("../../fixtures/templates.json")).expect("bundled templates are valid"))
}

/// `FullName` → `full name`, `car_makers` → `car makers`.
pub fn humanize(name: &str) -> String {
    let mut out = String::new();
    let mut prev: Option<char> = None;
    for c in name.chars() {
        if c == '_' {
            out.push(' ');
        } else {
            if c.is_uppercase() && prev.is_some_and(|p| p.is_lowercase()) {
                out.push(' ');
            }
            out.extend(c.to_lowercase());
        }
        prev = Some(c);
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn spaced(name: &str) -> String {
    name.replace('_', " ")
}

fn fill(template: &str, slots: &[(&str, String)]) -> String {
    slots
        .iter()
        .fold(template.to_string(), |t, (k, v)| t.replace(&format!("{{{k}}}"), v))
}

/// The assistant's templated clarification request for a mutated example.
pub fn build_clarification_request(record: &MutationRecord) -> String {
    let template = templates()
        .clarification_request
        .get(record.category.token())
        .map(String::as_str)
        .unwrap_or("Could you clarify your question?");
    let cols = record.introduced_columns();
    let vals = record.introduced_values();
    let target_col = record.target.as_ref().map(|t| &t.column);
    let target_val = record
        .target
        .as_ref()
        .and_then(|t| t.value.as_ref())
        .map(|v| v.to_string())
        .unwrap_or_default();
    let col_words = target_col.map(|c| humanize(&c.column)).unwrap_or_default();
    let table_words = target_col.map(|c| humanize(&c.table)).unwrap_or_default();
    let nth_col = |i: usize| cols.get(i).map(|c| c.column.clone()).unwrap_or_default();
    let nth_val = |i: usize| vals.get(i).map(|v| v.to_string()).unwrap_or_default();
    let slots: Vec<(&str, String)> = match record.category {
        CategoryLabel::AmbiguousSelectColumn => vec![("c1", nth_col(0)), ("c2", nth_col(1))],
        CategoryLabel::AmbiguousWhereColumn => vec![
            ("value", target_val),
            ("c1", spaced(&nth_col(0))),
            ("c2", spaced(&nth_col(1))),
        ],
        CategoryLabel::AmbiguousValuesWithinColumn => vec![
            ("value", target_val),
            ("column", col_words),
            ("v1", nth_val(0)),
            ("v2", nth_val(1)),
        ],
        CategoryLabel::UnsupportedJoin => vec![
            ("t1", record.join_tables.first().map(|t| humanize(t)).unwrap_or_default()),
            ("t2", record.join_tables.get(1).map(|t| humanize(t)).unwrap_or_default()),
        ],
        _ => vec![("column", col_words), ("table", table_words), ("value", target_val)],
    };
    fill(template, &slots)
}

/// Picks one executing candidate with a stream seeded by the run seed and the example.
pub fn select_clarified_sql(
    record: &MutationRecord,
    db: &DatabaseHandle,
    seed: u64,
) -> Result<(ClarifiedCandidate, ResultTable), DialogueError> {
    let executing: Vec<(ClarifiedCandidate, ResultTable)> = record
        .clarified_sql_candidates
        .iter()
        .filter_map(|c| execute(db, &c.sql).ok().map(|r| (c.clone(), r)))
        .collect();
    if executing.is_empty() {
        return Err(DialogueError::NoExecutableCandidate);
    }
    let mut rng = rng_for(seed, &[&record.seed_example_id, record.category.slug(), "clarified"]);
    let pick = rng.gen_range(0..executing.len());
    Ok(executing.into_iter().nth(pick).expect("index in range"))
}

fn norm_mention(s: &str) -> String {
    s.replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// True when `text` names `target` (if any) and none of `others`.
pub fn mention_rule(text: &str, target: &str, others: &[String]) -> bool {
    let text = norm_mention(text);
    let target = norm_mention(target);
    (target.is_empty() || text.contains(&target))
        && others
            .iter()
            .map(|o| norm_mention(o))
            .all(|o| o.is_empty() || o == target || !text.contains(&o))
}

/// Targets of the candidates that were not chosen.
pub fn rejected_targets(record: &MutationRecord, chosen: &ClarifiedCandidate) -> Vec<String> {
    record
        .clarified_sql_candidates
        .iter()
        .filter(|c| c.sql != chosen.sql)
        .map(|c| c.target.clone())
        .collect()
}

/// The candidate a finished conversation committed to.
pub fn chosen_candidate(conv: &Conversation) -> Option<&ClarifiedCandidate> {
    let sql = conv.final_sql()?;
    conv.mutation
        .as_ref()?
        .clarified_sql_candidates
        .iter()
        .find(|c| c.sql == sql)
}

/// Whether the clarification turn of `conv` satisfies the mention rule.
pub fn passes_mention_rule(conv: &Conversation) -> bool {
    let (Some(record), Some(turn)) = (conv.mutation.as_ref(), conv.turn(TurnKind::ClarificationResponse)) else {
        return true;
    };
    match chosen_candidate(conv) {
        Some(chosen) => mention_rule(&turn.text, &chosen.target, &rejected_targets(record, chosen)),
        None => false,
    }
}

fn conversation_block(conv: &Conversation, placeholder: Option<TurnKind>) -> String {
    let mut out = String::from("<conversation>\n");
    for t in &conv.turns {
        let speaker = match t.role {
            super::Role::User => "USER",
            super::Role::Assistant => "DB EXPERT",
        };
        let text = match (&t.sql, placeholder) {
            (_, Some(k)) if k == t.kind => "empty_user_clarification_response".to_string(),
            (Some(sql), _) => sql.clone(),
            (None, _) => t.text.clone(),
        };
        out.push_str(&format!("{speaker}: {text}\n"));
    }
    out.push_str("</conversation>");
    out
}

/// Schema of `db` in prompt form.
pub fn schema_block(db: &DatabaseHandle) -> Result<String, DialogueError> {
    let schema = introspect(db)?;
    let samples = sample_values(db, &schema, 3)?;
    Ok(format!("<schema>\n{}</schema>", render_schema_markdown(&schema, &samples)))
}

/// Writes the user clarification that leads to the chosen SQL.
pub fn reverse_generate_clarification(
    draft: &Conversation,
    chosen: &ClarifiedCandidate,
    provider: &dyn Provider,
    schema_md: &str,
) -> Result<String, DialogueError> {
    let record = draft
        .mutation
        .as_ref()
        .ok_or(DialogueError::Precondition("draft has no mutation record"))?;
    let text = match &record.fixed_clarification {
        Some(fixed) => fixed.clone(),
        None => {
            let answer = chosen.question.clone().unwrap_or_else(|| record.seed_question.clone());
            let req = ProviderRequest::new(
                Task::FillClarification,
                format!("{schema_md}\n{}", conversation_block(draft, Some(TurnKind::ClarificationResponse))),
            )
            .hint("category", record.category.token())
            .hint("target", chosen.target.clone())
            .hint("answer", answer);
            complete_result(provider, &req)?
        }
    };
    if text.trim().is_empty() {
        return Err(ProviderError::Refusal("empty clarification".into()).into());
    }
    if !mention_rule(&text, &chosen.target, &rejected_targets(record, chosen)) {
        return Err(DialogueError::FilterReject(text));
    }
    Ok(text)
}

/// One SQL covering both interpretations of an ambiguous column.
pub fn build_helpful_sql(record: &MutationRecord, schema_before: &SchemaDef) -> Result<String, DialogueError> {
    let cols: Vec<ColumnRef> = record.introduced_columns().into_iter().cloned().collect();
    let (Some(target), [c1, c2]) = (&record.target, cols.as_slice()) else {
        return Err(DialogueError::Precondition("helpful SQL needs two candidate columns"));
    };
    let tree = parse(&record.seed_sql)?;
    let old = target.column.clone();
    match record.category {
        CategoryLabel::AmbiguousSelectColumn => {
            let first = rewrite(&tree, schema_before, &RewriteSpec::SubstituteColumn { old: old.clone(), new: c1.clone() })?;
            let second = rewrite(&tree, schema_before, &RewriteSpec::SubstituteColumn { old, new: c2.clone() })?;
            let mut out = first.clone();
            let branches = out.selects_mut().into_iter().zip(second.selects());
            for (sel, other) in branches {
                let extra: Vec<_> = sel
                    .projection
                    .iter()
                    .zip(&other.projection)
                    .filter(|(a, b)| a != b)
                    .map(|(_, b)| b.clone())
                    .collect();
                sel.projection.extend(extra);
            }
            if out == first {
                return Err(DialogueError::Precondition("column is not projected"));
            }
            Ok(render(&out))
        }
        CategoryLabel::AmbiguousWhereColumn => {
            let widened = rewrite(
                &tree,
                schema_before,
                &RewriteSpec::WidenPredicate {
                    old,
                    candidates: vec![c1.clone(), c2.clone()],
                },
            )?;
            let projected = rewrite(&widened, schema_before, &RewriteSpec::AddProjection(vec![c1.clone(), c2.clone()]))?;
            Ok(render(&projected))
        }
        _ => Err(DialogueError::Precondition("helpful SQL only for ambiguous columns")),
    }
}

/// Rephrases the user clarification; SQL, category and mutation never change.
pub fn refine_conversation(conv: &Conversation, provider: &dyn Provider, schema_md: &str) -> Conversation {
    let mut out = conv.clone();
    out.provenance.refined = false;
    let Some(turn) = conv.turn(TurnKind::ClarificationResponse) else {
        return out;
    };
    let req = ProviderRequest::new(Task::Refine, format!("{schema_md}\n{}", conversation_block(conv, None)))
        .hint("clarification", turn.text.clone());
    let refined = match complete_result(provider, &req) {
        Ok(text) if !text.trim().is_empty() => text,
        Ok(_) | Err(_) => return out,
    };
    out.turn_mut(TurnKind::ClarificationResponse).expect("turn present").text = refined;
    if !passes_mention_rule(&out) || out.turns.iter().zip(&conv.turns).any(|(a, b)| a.sql != b.sql) {
        let mut kept = conv.clone();
        kept.provenance.refined = false;
        return kept;
    }
    out.provenance.refined = true;
    out
}

fn results_block(table: &ResultTable) -> String {
    let mut out = String::from("<execution_results>\n");
    out.push_str(&table.columns.join(" | "));
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" | "));
        out.push('\n');
    }
    if table.truncated {
        out.push_str("...\n");
    }
    out.push_str("</execution_results>");
    out
}

/// A short answer built from the (at most 30-row) execution result.
pub fn explain_results(conv: &Conversation, provider: &dyn Provider, schema_md: &str) -> String {
    let table = conv.execution.shown();
    let req = ProviderRequest::new(
        Task::ExplainResults,
        format!("{schema_md}\n{}\n{}", conversation_block(conv, None), results_block(&table)),
    )
    .hint("result", serde_json::to_string(&table).expect("table serialises"));
    match complete_result(provider, &req) {
        Ok(text) if !text.trim().is_empty() => text,
        _ => templates().row_count_fallback.replace("{n}", &table.rows.len().to_string()),
    }
}

/// Settings shared by every assembled conversation.
#[derive(Debug, Clone)]
pub struct AssembleOptions {
    pub seed: u64,
    pub pipeline_version: String,
    /// Answer with one SQL covering both interpretations instead of asking.
    pub helpful: bool,
}

fn provenance(example_id: &str, provider: &dyn Provider, opts: &AssembleOptions) -> Provenance {
    Provenance {
        seed_example_id: example_id.to_string(),
        pipeline_version: opts.pipeline_version.clone(),
        provider_id: provider.id().to_string(),
        seed: opts.seed,
        refined: false,
    }
}

/// Conversation id: category slug plus seed example id.
pub fn conversation_id(category: CategoryLabel, example_id: &str) -> String {
    format!("{}-{}", category.slug(), example_id)
}

/// Builds the conversation for a mutated example; `db` is the mutated working copy.
pub fn assemble_conversation(
    record: MutationRecord,
    db: &DatabaseHandle,
    schema_before: &SchemaDef,
    provider: &dyn Provider,
    opts: &AssembleOptions,
) -> Result<Conversation, DialogueError> {
    let mut conv = Conversation::new(
        conversation_id(record.category, &record.seed_example_id),
        db.db_id().to_string(),
        record.category,
        provenance(&record.seed_example_id, provider, opts),
    );
    let schema_md = schema_block(db)?;
    conv.turns.push(Turn::new(TurnKind::InitialQuestion, record.mutated_question.clone()));
    let helpful = if opts.helpful {
        build_helpful_sql(&record, schema_before)
            .ok()
            .and_then(|sql| execute(db, &sql).ok().map(|r| (sql, r)))
    } else {
        None
    };
    conv.mutation = Some(record);
    let record = conv.mutation.as_ref().expect("just set");
    if let Some((sql, result)) = helpful {
        let cols = record.introduced_columns();
        let text = fill(
            &templates().helpful_sql,
            &[("c1", spaced(&cols[0].column)), ("c2", spaced(&cols[1].column))],
        );
        conv.turns.push(Turn::final_sql(text, sql.clone()));
        conv.gold_sql = sql.clone();
        conv.helpful_sql = Some(sql);
        conv.execution = result;
    } else {
        let (chosen, result) = select_clarified_sql(record, db, opts.seed)?;
        conv.turns.push(Turn::new(TurnKind::ClarificationRequest, build_clarification_request(record)));
        conv.turns.push(Turn::new(TurnKind::ClarificationResponse, String::new()));
        conv.turns.push(Turn::final_sql(templates().final_sql.clone(), chosen.sql.clone()));
        conv.gold_sql = chosen.sql.clone();
        conv.execution = result;
        let text = reverse_generate_clarification(&conv, &chosen, provider, &schema_md)?;
        conv.turn_mut(TurnKind::ClarificationResponse).expect("turn present").text = text;
        conv = refine_conversation(&conv, provider, &schema_md);
    }
    let explanation = explain_results(&conv, provider, &schema_md);
    conv.turns.push(Turn::new(TurnKind::ResultExplanation, explanation));
    Ok(conv)
}

/// Three-turn conversation for an unmodified example.
pub fn assemble_answerable(
    example: &CorpusExample,
    db: &DatabaseHandle,
    provider: &dyn Provider,
    opts: &AssembleOptions,
) -> Result<Conversation, DialogueError> {
    let result = execute(db, &example.gold_sql)?;
    let mut conv = Conversation::new(
        conversation_id(CategoryLabel::Answerable, &example.example_id),
        example.db_id.clone(),
        CategoryLabel::Answerable,
        provenance(&example.example_id, provider, opts),
    );
    conv.turns.push(Turn::new(TurnKind::InitialQuestion, example.question.clone()));
    conv.turns.push(Turn::final_sql(templates().final_sql.clone(), example.gold_sql.clone()));
    conv.gold_sql = example.gold_sql.clone();
    conv.execution = result;
    let schema_md = schema_block(db)?;
    let explanation = explain_results(&conv, provider, &schema_md);
    conv.turns.push(Turn::new(TurnKind::ResultExplanation, explanation));
    Ok(conv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn humanized_names() {
        assert_eq!(humanize("FullName"), "full name");
        assert_eq!(humanize("car_makers"), "car makers");
        assert_eq!(humanize("Port_of_Origin"), "port of origin");
        assert_eq!(humanize("ID"), "id");
    }

    #[test]
    fn mention_rule_cases() {
        let others = vec!["Current_Age".to_string()];
        assert!(mention_rule(
            "I'm looking for the age when they entered, so the Age at Entry.",
            "Age_at_Entry",
            &others
        ));
        assert!(!mention_rule("Either the age at entry or the current age", "Age_at_Entry", &others));
        assert!(!mention_rule("How old are they?", "Age_at_Entry", &others));
        assert!(mention_rule("anything", "", &[]));
        assert!(mention_rule(
            "How many templates have the template type code 'useful CV 2'?",
            "useful CV 2",
            &["useful CV 1".to_string()]
        ));
    }
}
