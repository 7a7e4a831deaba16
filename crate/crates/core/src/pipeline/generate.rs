use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::Rng;

use super::gates::{gate_binary_category, gate_executability, gate_mention};
use super::stats::{GenStats, SkipReason};
use crate::corpus::{introspect, CorpusError, CorpusExample, DbStore, SchemaDef, FORMAT_VERSION};
use crate::dialogue::{
    assemble_answerable, assemble_conversation, conversation_id, schema_block, AssembleOptions, Conversation,
};
use crate::mutator::{mutate, CategoryLabel, MutationInput, MutationRecord};
use crate::par::par_map;
use crate::provider::Provider;
use crate::seeding::rng_for;

pub const PIPELINE_VERSION: &str = concat!("practiq-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    pub db_dir: PathBuf,
    /// Mutated categories to try.
    pub categories: Vec<CategoryLabel>,
    /// Upper bound per category, Answerable included; absent means unbounded.
    pub quotas: BTreeMap<CategoryLabel, usize>,
    /// Share of eligible ambiguous-column examples answered with helpful SQL.
    pub helpful_fraction: f64,
    /// Share of examples kept unmodified as answerable conversations.
    pub answerable_share: f64,
    pub jobs: usize,
    pub workdir: PathBuf,
}

impl GenConfig {
    pub fn new(db_dir: impl Into<PathBuf>, seed: u64) -> GenConfig {
        GenConfig {
            seed,
            db_dir: db_dir.into(),
            categories: CategoryLabel::MUTATED.to_vec(),
            quotas: BTreeMap::new(),
            helpful_fraction: 0.3,
            answerable_share: 0.3,
            jobs: crate::bench::default_jobs(),
            workdir: crate::bench::default_workdir(),
        }
    }

    fn quota(&self, cat: CategoryLabel) -> usize {
        self.quotas.get(&cat).copied().unwrap_or(usize::MAX)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

struct Attempt {
    before: SchemaDef,
    results: Vec<(CategoryLabel, Result<MutationRecord, SkipReason>)>,
}

fn try_example(
    ex: &CorpusExample,
    store: &DbStore,
    all: &[CorpusExample],
    config: &GenConfig,
    provider: &dyn Provider,
) -> Result<Attempt, CorpusError> {
    let pristine = store.checkout(&ex.db_id, &config.workdir)?;
    let before = introspect(&pristine)?;
    drop(pristine);
    let mut results = Vec::new();
    for &cat in &config.categories {
        if config.quota(cat) == 0 {
            continue;
        }
        let db = store.checkout(&ex.db_id, &config.workdir)?;
        let input = MutationInput {
            example: ex,
            schema: &before,
            db: &db,
            seed: config.seed,
        };
        let outcome = mutate(cat, input, provider, all).map_err(|e| {
            log::debug!("{} {cat}: {e}", ex.example_id);
            SkipReason::from(&e)
        });
        results.push((cat, outcome));
    }
    Ok(Attempt { before, results })
}

enum Job<'a> {
    Mutated {
        example: &'a CorpusExample,
        record: MutationRecord,
        before: &'a SchemaDef,
    },
    Answerable(&'a CorpusExample),
}

impl Job<'_> {
    fn category(&self) -> CategoryLabel {
        match self {
            Job::Mutated { record, .. } => record.category,
            Job::Answerable(_) => CategoryLabel::Answerable,
        }
    }

    fn before(&self) -> Option<&SchemaDef> {
        match self {
            Job::Mutated { before, .. } => Some(before),
            Job::Answerable(_) => None,
        }
    }

    fn example(&self) -> &CorpusExample {
        match self {
            Job::Mutated { example, .. } | Job::Answerable(example) => example,
        }
    }
}

#[derive(Default)]
struct GateLog {
    executability: Option<bool>,
    mention: Option<bool>,
    binary: Option<bool>,
}

fn build(job: &Job<'_>, store: &DbStore, config: &GenConfig, provider: &dyn Provider) -> (Result<Conversation, SkipReason>, GateLog) {
    let mut gates = GateLog::default();
    let ex = job.example();
    let deltas = match job {
        Job::Mutated { record, .. } => record.deltas.as_slice(),
        Job::Answerable(_) => &[],
    };
    let db = match store.checkout_with(&ex.db_id, deltas, &config.workdir) {
        Ok(db) => db,
        Err(_) => return (Err(SkipReason::DatabaseError), gates),
    };
    let helpful = matches!(
        job.category(),
        CategoryLabel::AmbiguousSelectColumn | CategoryLabel::AmbiguousWhereColumn
    ) && rng_for(config.seed, &[&ex.example_id, "helpful"]).gen::<f64>() < config.helpful_fraction;
    let opts = AssembleOptions {
        seed: config.seed,
        pipeline_version: PIPELINE_VERSION.to_string(),
        helpful,
    };
    let assembled = match job {
        Job::Mutated { record, before, .. } => assemble_conversation(record.clone(), &db, before, provider, &opts),
        Job::Answerable(ex) => assemble_answerable(ex, &db, provider, &opts),
    };
    let conv = match assembled {
        Ok(c) => c,
        Err(e) => {
            log::debug!("{} {}: {e}", ex.example_id, job.category());
            let reason = SkipReason::from(&e);
            if reason == SkipReason::MentionGate {
                gates.mention = Some(false);
            }
            return (Err(reason), gates);
        }
    };
    let exec_ok = gate_executability(&conv, &db, job.before());
    gates.executability = Some(exec_ok.is_ok());
    if let Err(why) = exec_ok {
        log::debug!("{}: executability gate: {why}", conv.id);
        return (Err(SkipReason::ExecutabilityGate), gates);
    }
    let mention = gate_mention(&conv);
    gates.mention = Some(mention);
    if !mention {
        return (Err(SkipReason::MentionGate), gates);
    }
    let schema = match schema_block(&db) {
        Ok(s) => s,
        Err(_) => return (Err(SkipReason::DatabaseError), gates),
    };
    let binary = gate_binary_category(&conv, provider, &schema);
    gates.binary = Some(binary);
    if !binary {
        return (Err(SkipReason::BinaryGate), gates);
    }
    (Ok(conv), gates)
}

/// Generates conversations. Jobs whose conversation is already in `existing` reuse it
/// instead of being rebuilt. `sink` sees each new conversation as soon as it passes the gates.
pub fn generate(
    catalog: &[SchemaDef],
    examples: &[CorpusExample],
    config: &GenConfig,
    provider: &dyn Provider,
    existing: &[Conversation],
    sink: &(dyn Fn(&Conversation) + Sync),
) -> (Vec<Conversation>, GenStats) {
    let done: BTreeMap<&str, &Conversation> = existing.iter().map(|c| (c.id.as_str(), c)).collect();
    let store = DbStore::new(&config.db_dir);
    let known: BTreeSet<&str> = catalog.iter().map(|s| s.db_id.as_str()).collect();
    let mut stats = GenStats {
        seed: config.seed,
        examples: examples.len(),
        ..GenStats::default()
    };
    let usable: Vec<&CorpusExample> = examples
        .iter()
        .filter(|e| known.contains(e.db_id.as_str()) && store.contains(&e.db_id))
        .collect();
    stats.unknown_database = examples.len() - usable.len();

    let attempts = par_map(&usable, config.jobs, |ex| try_example(ex, &store, examples, config, provider));

    let mut jobs: Vec<Job<'_>> = Vec::new();
    let mut assigned: BTreeMap<CategoryLabel, usize> = BTreeMap::new();
    let mut pool: Vec<&CorpusExample> = Vec::new();
    for (ex, attempt) in usable.iter().zip(&attempts) {
        let Ok(attempt) = attempt else {
            pool.push(ex);
            continue;
        };
        let mut feasible = Vec::new();
        for (cat, outcome) in &attempt.results {
            stats.cat(*cat).attempted += 1;
            match outcome {
                Ok(_) => {
                    stats.cat(*cat).mutated += 1;
                    feasible.push(*cat);
                }
                Err(reason) => stats.skip(*cat, *reason),
            }
        }
        let keep_answerable = rng_for(config.seed, &[&ex.example_id, "answerable"]).gen::<f64>() < config.answerable_share;
        let open: Vec<CategoryLabel> = feasible
            .iter()
            .copied()
            .filter(|c| assigned.get(c).copied().unwrap_or(0) < config.quota(*c))
            .collect();
        let choice = if keep_answerable {
            None
        } else {
            open.iter().copied().min_by_key(|c| (assigned.get(c).copied().unwrap_or(0), *c))
        };
        for &cat in &feasible {
            if Some(cat) == choice {
                continue;
            }
            let reason = if open.contains(&cat) { SkipReason::Reassigned } else { SkipReason::QuotaReached };
            stats.skip(cat, reason);
        }
        match choice {
            Some(cat) => {
                *assigned.entry(cat).or_default() += 1;
                stats.cat(cat).assigned += 1;
                let record = attempt
                    .results
                    .iter()
                    .find(|(c, _)| *c == cat)
                    .and_then(|(_, r)| r.as_ref().ok())
                    .expect("feasible category has a record")
                    .clone();
                jobs.push(Job::Mutated {
                    example: ex,
                    record,
                    before: &attempt.before,
                });
            }
            None => pool.push(ex),
        }
    }
    let answerable_quota = config.quota(CategoryLabel::Answerable);
    for (i, ex) in pool.into_iter().enumerate() {
        if i < answerable_quota {
            stats.cat(CategoryLabel::Answerable).assigned += 1;
            jobs.push(Job::Answerable(ex));
        } else {
            stats.skip(CategoryLabel::Answerable, SkipReason::QuotaReached);
        }
    }

    let mut conversations = Vec::new();
    let mut todo = Vec::new();
    for job in jobs {
        match done.get(conversation_id(job.category(), &job.example().example_id).as_str()) {
            Some(conv) => {
                stats.resumed += 1;
                stats.cat(job.category()).emitted += 1;
                conversations.push((*conv).clone());
            }
            None => todo.push(job),
        }
    }
    let built = par_map(&todo, config.jobs, |job| {
        let out = build(job, &store, config, provider);
        if let Ok(conv) = &out.0 {
            sink(conv);
        }
        out
    });
    for (job, (result, gates)) in todo.iter().zip(built) {
        if let Some(p) = gates.executability {
            stats.executability_gate.record(p);
        }
        if let Some(p) = gates.mention {
            stats.mention_gate.record(p);
        }
        if let Some(p) = gates.binary {
            stats.binary_gate.record(p);
        }
        match result {
            Ok(conv) => {
                stats.cat(job.category()).emitted += 1;
                conversations.push(conv);
            }
            Err(reason) => stats.skip(job.category(), reason),
        }
    }
    stats.emitted = stats.per_category.values().map(|s| s.emitted).sum();
    sort_conversations(&mut conversations);
    (conversations, stats)
}

/// Stable output order: seed example, then conversation id.
pub fn sort_conversations(conversations: &mut [Conversation]) {
    conversations.sort_by(|a, b| {
        (&a.provenance.seed_example_id, &a.id).cmp(&(&b.provenance.seed_example_id, &b.id))
    });
}

pub fn run_generation(
    catalog: &[SchemaDef],
    examples: &[CorpusExample],
    config: &GenConfig,
    provider: &dyn Provider,
) -> (Vec<Conversation>, GenStats) {
    generate(catalog, examples, config, provider, &[], &|_| {})
}

/// Complete records from a possibly interrupted output file; a torn last line is dropped.
pub fn read_partial(path: &Path) -> Result<Vec<Conversation>, PipelineError> {
    let io = |e| PipelineError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(e)),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io)?;
        match serde_json::from_str::<Conversation>(&line) {
            Ok(c) if c.format_version == FORMAT_VERSION => out.push(c),
            _ => log::warn!("dropping unreadable line in {}", path.display()),
        }
    }
    Ok(out)
}

/// Runs generation into `out`, resuming from whatever complete records it already holds,
/// then rewrites it in stable order.
pub fn generate_to_file(
    catalog: &[SchemaDef],
    examples: &[CorpusExample],
    config: &GenConfig,
    provider: &dyn Provider,
    out: &Path,
) -> Result<(Vec<Conversation>, GenStats), PipelineError> {
    let io = |e| PipelineError::Io {
        path: out.to_path_buf(),
        source: e,
    };
    let mut existing = read_partial(out)?;
    existing.retain(|c| c.provenance.seed == config.seed);
    {
        let mut f = std::fs::File::create(out).map_err(io)?;
        for c in &existing {
            writeln!(f, "{}", serde_json::to_string(c).expect("conversation serialises")).map_err(io)?;
        }
    }
    let appender = Mutex::new(std::fs::OpenOptions::new().append(true).open(out).map_err(io)?);
    let sink = |c: &Conversation| {
        let mut f = appender.lock().expect("writer lock");
        let line = serde_json::to_string(c).expect("conversation serialises");
        if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
            log::error!("append to {}: {e}", out.display());
        }
    };
    let (all, stats) = generate(catalog, examples, config, provider, &existing, &sink);
    drop(appender);
    let tmp = out.with_extension("jsonl.tmp");
    crate::corpus::write_conversations(&tmp, &all)?;
    std::fs::rename(&tmp, out).map_err(io)?;
    Ok((all, stats))
}
