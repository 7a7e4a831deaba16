use std::path::Path;

use serde::Serialize;

use super::gates::{check_category_invariants, gate_mention};
use crate::corpus::{introspect, DbStore};
use crate::dialogue::Conversation;
use crate::mutator::CategoryLabel;
use crate::par::par_map;
use crate::sqlkit::execute;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: String,
    pub message: String,
}

fn check(conv: &Conversation, store: &DbStore, workdir: &Path) -> Result<(), String> {
    conv.check_turns()?;
    let deltas = conv.mutation.as_ref().map(|m| m.deltas.as_slice()).unwrap_or(&[]);
    let db = store
        .checkout_with(&conv.db_id, deltas, workdir)
        .map_err(|e| format!("cannot rebuild database: {e}"))?;
    let final_sql = conv.final_sql().ok_or("no final SQL")?;
    execute(&db, final_sql).map_err(|e| format!("final SQL fails: {e}"))?;
    if let Some(h) = &conv.helpful_sql {
        execute(&db, h).map_err(|e| format!("helpful SQL fails: {e}"))?;
    }
    let original = if conv.category == CategoryLabel::UnsupportedJoin {
        let pristine = store.checkout(&conv.db_id, workdir).map_err(|e| e.to_string())?;
        Some(introspect(&pristine).map_err(|e| e.to_string())?)
    } else {
        None
    };
    check_category_invariants(conv, &db, original.as_ref())?;
    if !gate_mention(conv) {
        return Err("clarification breaks the mention rule".into());
    }
    Ok(())
}

/// Rebuilds each conversation's database from its deltas and re-checks it.
pub fn validate(dataset: &[Conversation], db_dir: &Path, workdir: &Path, jobs: usize) -> Vec<Violation> {
    let store = DbStore::new(db_dir);
    par_map(dataset, jobs, |conv| {
        check(conv, &store, workdir).err().map(|message| Violation {
            id: conv.id.clone(),
            message,
        })
    })
    .into_iter()
    .flatten()
    .collect()
}
