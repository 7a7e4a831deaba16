use std::path::PathBuf;

use practiq::corpus::{introspect, load_examples, CorpusExample, DbStore};
use practiq::dialogue::{
    assemble_answerable, assemble_conversation, build_clarification_request, passes_mention_rule, AssembleOptions,
    Conversation, TurnKind,
};
use practiq::mutator::{mutate, CategoryLabel, MutationInput};
use practiq::provider::MockProvider;
use practiq::sqlkit::execute;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus")
}

fn examples() -> Vec<CorpusExample> {
    load_examples(&corpus_dir().join("dev.json")).unwrap().examples
}

fn options(helpful: bool) -> AssembleOptions {
    AssembleOptions {
        seed: 7,
        pipeline_version: "test".into(),
        helpful,
    }
}

fn conversation(ex: &CorpusExample, cat: CategoryLabel, all: &[CorpusExample], helpful: bool) -> Option<Conversation> {
    let work = tempfile::tempdir().unwrap();
    let db = DbStore::new(corpus_dir().join("database")).checkout(&ex.db_id, work.path()).unwrap();
    let schema = introspect(&db).unwrap();
    let provider = MockProvider::new(7);
    let input = MutationInput {
        example: ex,
        schema: &schema,
        db: &db,
        seed: 7,
    };
    let record = mutate(cat, input, &provider, all).ok()?;
    let conv = assemble_conversation(record, &db, &schema, &provider, &options(helpful)).ok()?;
    execute(&db, conv.final_sql().unwrap()).unwrap();
    Some(conv)
}

fn by_id(id: &str, cat: CategoryLabel, helpful: bool) -> Conversation {
    let all = examples();
    let ex = all.iter().find(|e| e.example_id == id).unwrap();
    conversation(ex, cat, &all, helpful).unwrap()
}

#[test]
fn every_assembled_conversation_is_well_formed() {
    let all = examples();
    for cat in CategoryLabel::MUTATED {
        let mut built = 0;
        for ex in &all {
            let Some(c) = conversation(ex, cat, &all, false) else { continue };
            built += 1;
            c.check_turns().unwrap();
            assert!(passes_mention_rule(&c), "{}", c.id);
            assert_eq!(c.turns.len(), 5);
            assert_eq!(c.initial_question(), c.mutation.as_ref().unwrap().mutated_question);
        }
        assert!(built > 0, "{cat}");
    }
}

#[test]
fn english_channel_clarification_names_both_columns() {
    let c = by_id("ex00011", CategoryLabel::AmbiguousWhereColumn, false);
    let request = build_clarification_request(c.mutation.as_ref().unwrap());
    assert_eq!(
        request,
        "I see 'English Channel' in two columns: Port of Origin and Destination. Can you clarify which you need?"
    );
    assert_eq!(c.turn(TurnKind::ClarificationRequest).unwrap().text, request);
}

#[test]
fn helpful_capacity_answer_returns_both_columns() {
    let c = by_id("ex00001", CategoryLabel::AmbiguousSelectColumn, true);
    assert_eq!(c.turns.len(), 3);
    let helpful = c.helpful_sql.as_deref().unwrap();
    assert!(helpful.contains("`Standing Capacity`") && helpful.contains("`Seating Capacity`"), "{helpful}");
    assert_eq!(c.final_sql(), Some(helpful));
    assert_eq!(c.gold_sql, helpful);
}

#[test]
fn unsupported_join_falls_back_to_the_seed_query() {
    let c = by_id("ex00036", CategoryLabel::UnsupportedJoin, false);
    let rec = c.mutation.as_ref().unwrap();
    assert_eq!(c.final_sql(), Some(rec.seed_sql.as_str()));
    let request = &c.turn(TurnKind::ClarificationRequest).unwrap().text;
    assert!(request.contains("books") && request.contains("teacher"), "{request}");
}

#[test]
fn answerable_conversations_go_straight_to_sql() {
    let all = examples();
    let ex = &all[0];
    let work = tempfile::tempdir().unwrap();
    let db = DbStore::new(corpus_dir().join("database")).checkout(&ex.db_id, work.path()).unwrap();
    let c = assemble_answerable(ex, &db, &MockProvider::new(7), &options(false)).unwrap();
    assert_eq!(c.category, CategoryLabel::Answerable);
    assert_eq!(c.turns.len(), 3);
    assert_eq!(c.final_sql(), Some(ex.gold_sql.as_str()));
    assert!(c.mutation.is_none());
}
