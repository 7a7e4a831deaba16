use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{render_schema_markdown, sample_values};
use crate::corpus::{introspect, CorpusError, DatabaseHandle, DbStore, SchemaDef};
use crate::dialogue::Conversation;
use crate::valuelink::ValueIndex;

/// A conversation's database with its mutations replayed.
pub struct DbContext {
    pub handle: DatabaseHandle,
    pub schema: SchemaDef,
    pub schema_md: String,
    pub index: ValueIndex,
}

impl DbContext {
    pub fn open(store: &DbStore, conv: &Conversation, workdir: &Path, cap: usize) -> Result<DbContext, CorpusError> {
        let deltas = conv.mutation.as_ref().map(|m| m.deltas.as_slice()).unwrap_or(&[]);
        let handle = store.checkout_with(&conv.db_id, deltas, workdir)?;
        let schema = introspect(&handle)?;
        let samples = sample_values(&handle, &schema, 3)?;
        let schema_md = render_schema_markdown(&schema, &samples);
        let index = ValueIndex::build(&handle, &schema, cap)?;
        Ok(DbContext {
            handle,
            schema,
            schema_md,
            index,
        })
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Fresh scratch directory path under the system temp dir, distinct per call.
pub fn default_workdir() -> PathBuf {
    static NEXT: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let n = NEXT.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    std::env::temp_dir().join(format!("practiq-{}-{n}", std::process::id()))
}

/// Runs `f` on every conversation, opening each distinct mutated database once.
/// Output order follows `dataset`.
pub(crate) fn map_with_db<T, F>(
    dataset: &[Conversation],
    store: &DbStore,
    workdir: &Path,
    jobs: usize,
    cap: usize,
    f: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(Result<&DbContext, &CorpusError>, &Conversation) -> T + Sync,
{
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, conv) in dataset.iter().enumerate() {
        let deltas = conv.mutation.as_ref().map(|m| &m.deltas);
        let key = format!("{}\u{1}{}", conv.db_id, serde_json::to_string(&deltas).expect("deltas serialise"));
        groups.entry(key).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let per_group = crate::par::par_map(&groups, jobs, |members| {
        let ctx = DbContext::open(store, &dataset[members[0]], workdir, cap);
        members.iter().map(|&i| (i, f(ctx.as_ref(), &dataset[i]))).collect::<Vec<_>>()
    });
    let mut slots: Vec<Option<T>> = (0..dataset.len()).map(|_| None).collect();
    for (i, out) in per_group.into_iter().flatten() {
        slots[i] = Some(out);
    }
    slots.into_iter().map(|t| t.expect("every item visited")).collect()
}
