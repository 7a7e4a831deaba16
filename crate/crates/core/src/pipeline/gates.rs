use crate::bench::definitions_block;
use crate::corpus::{DatabaseHandle, SchemaDef};
use crate::dialogue::{passes_mention_rule, Conversation};
use crate::mutator::{count_matching, empty_answer, CategoryLabel};
use crate::provider::{complete_result, Provider, ProviderRequest, Task};
use crate::sqlkit::{execute, ExecErrorKind};

/// Mechanical checks of what the category promises about the mutated database.
/// `original` is the schema before mutation; only joins need it.
pub fn check_category_invariants(
    conv: &Conversation,
    db: &DatabaseHandle,
    original: Option<&SchemaDef>,
) -> Result<(), String> {
    let Some(record) = &conv.mutation else {
        return match conv.category {
            CategoryLabel::Answerable => Ok(()),
            c => Err(format!("{c} conversation without mutation record")),
        };
    };
    if record.category != conv.category {
        return Err("record and conversation categories differ".into());
    }
    let candidates_execute = || -> Result<Vec<usize>, String> {
        record
            .clarified_sql_candidates
            .iter()
            .map(|c| execute(db, &c.sql).map(|r| r.rows.len()).map_err(|e| format!("candidate fails: {e}")))
            .collect()
    };
    match conv.category {
        CategoryLabel::AmbiguousSelectColumn | CategoryLabel::AmbiguousWhereColumn => {
            if candidates_execute()?.len() != 2 {
                return Err("expected two candidates".into());
            }
        }
        CategoryLabel::AmbiguousValuesWithinColumn => {
            let rows = candidates_execute()?;
            if rows.len() != 2 || rows.contains(&0) {
                return Err("a value variant returns no rows".into());
            }
            let target = record.target.as_ref().ok_or("no target")?;
            for v in record.introduced_values() {
                let n = count_matching(db, &target.column, v).map_err(|e| e.to_string())?;
                if n == 0 {
                    return Err(format!("value {v} absent"));
                }
            }
        }
        CategoryLabel::NonexistentSelectColumn | CategoryLabel::NonexistentWhereColumn => match execute(db, &record.seed_sql) {
            Err(e) if e.kind == ExecErrorKind::UnknownColumn => {}
            Err(e) => return Err(format!("original SQL fails for another reason: {e}")),
            Ok(_) => return Err("original SQL still executes".into()),
        },
        CategoryLabel::NonexistentFilterValue => {
            let r = execute(db, &record.seed_sql).map_err(|e| format!("original SQL fails: {e}"))?;
            if !empty_answer(&record.seed_sql, &r) {
                return Err("original SQL still has an answer".into());
            }
            let target = record.target.as_ref().ok_or("no target")?;
            let value = target.value.as_ref().ok_or("no target value")?;
            let n = count_matching(db, &target.column, value).map_err(|e| e.to_string())?;
            if n != 0 {
                return Err(format!("{n} rows still carry the removed value"));
            }
        }
        CategoryLabel::UnsupportedJoin => {
            let now = crate::corpus::introspect(db).map_err(|e| e.to_string())?;
            let before = original.ok_or("original schema needed")?;
            if now.fk_components() <= before.fk_components() {
                return Err("foreign-key components did not increase".into());
            }
        }
        CategoryLabel::AmbiguousFilterCriteria => {
            if record.mutated_question == record.seed_question {
                return Err("question unchanged".into());
            }
        }
        CategoryLabel::Answerable => return Err("answerable conversation with mutation record".into()),
    }
    Ok(())
}

/// Turn shape, final and helpful SQL execution, and category invariants.
pub fn gate_executability(conv: &Conversation, db: &DatabaseHandle, original: Option<&SchemaDef>) -> Result<(), String> {
    conv.check_turns()?;
    let final_sql = conv.final_sql().ok_or("no final SQL")?;
    execute(db, final_sql).map_err(|e| format!("final SQL fails: {e}"))?;
    if let Some(h) = &conv.helpful_sql {
        execute(db, h).map_err(|e| format!("helpful SQL fails: {e}"))?;
    }
    check_category_invariants(conv, db, original)
}

pub fn gate_mention(conv: &Conversation) -> bool {
    passes_mention_rule(conv)
}

/// Asks the provider whether the initial question belongs to the designed category.
pub fn gate_binary_category(conv: &Conversation, provider: &dyn Provider, schema_block: &str) -> bool {
    let system = Task::BinaryCategoryCheck
        .prompt()
        .replace("{category_with_explanation}", &definitions_block(&[conv.category]));
    let user = format!("{schema_block}\n\n<question>\n{}\n</question>", conv.initial_question());
    let req = ProviderRequest::new(Task::BinaryCategoryCheck, user)
        .with_system_prompt(system)
        .hint("gold_label", conv.category.token());
    match complete_result(provider, &req) {
        Ok(text) => CategoryLabel::from_token(&text) == Some(conv.category),
        Err(_) => false,
    }
}
