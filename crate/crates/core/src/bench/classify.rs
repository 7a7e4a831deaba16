use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::context::{default_jobs, default_workdir, map_with_db};
use super::{render_relevant_values, EvalReport};
use crate::corpus::DbStore;
use crate::dialogue::Conversation;
use crate::mutator::CategoryLabel;
use crate::provider::{complete_result, Message, MessageRole, Provider, ProviderRequest, Task};
use crate::valuelink::{merge_values, oracle_values, retrieve_values, LinkConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("need {need} shots for {label}, have {have}")]
    InsufficientShots { label: CategoryLabel, need: usize, have: usize },
}

/// One worked classification example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub label: CategoryLabel,
    pub schema: String,
    pub question: String,
    pub thoughts: String,
}

#[derive(Deserialize)]
struct ShotFile {
    #[allow(dead_code)]
    version: u32,
    shots: Vec<Shot>,
}

/// The bundled exemplars, three per label.
pub fn bundled_shots() -> &'static [Shot] {
    static S: OnceLock<Vec<Shot>> = OnceLock::new();
    S.get_or_init(|| {
        let f: ShotFile = serde_json::from_str(include_str!("../../fixtures/shots.json")).expect("bundled shots are valid");
        f.shots
    })
}

#[derive(Deserialize)]
struct DefinitionFile {
    #[allow(dead_code)]
    version: u32,
    definitions: BTreeMap<String, String>,
}

/// Definition text of each of the eight mutated categories.
pub fn category_definition(label: CategoryLabel) -> Option<&'static str> {
    static D: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    D.get_or_init(|| {
        let f: DefinitionFile = serde_json::from_str(include_str!("../../fixtures/prompts/category_definitions.json"))
            .expect("bundled definitions are valid");
        f.definitions
    })
    .get(label.token())
    .map(String::as_str)
}

/// `- Token: definition` lines for `labels`.
pub fn definitions_block(labels: &[CategoryLabel]) -> String {
    labels
        .iter()
        .filter_map(|l| category_definition(*l).map(|d| format!("- {}: {d}", l.token())))
        .collect::<Vec<_>>()
        .join("\n")
}

fn user_message(schema_md: &str, question: &str) -> String {
    format!("<schema>\n{schema_md}\n</schema>\n\n<question>\n{question}\n</question>")
}

/// Nine-way prompt with `k` exemplars per label.
pub fn build_classification_prompt(
    schema_md: &str,
    question: &str,
    k: usize,
    shots: &[Shot],
) -> Result<ProviderRequest, BenchError> {
    let system = Task::NineWayClassify
        .prompt()
        .replace("{category_with_explanation}", &definitions_block(&CategoryLabel::MUTATED));
    let mut messages = Vec::new();
    for label in CategoryLabel::ALL {
        let mine: Vec<&Shot> = shots.iter().filter(|s| s.label == label).collect();
        if mine.len() < k {
            return Err(BenchError::InsufficientShots {
                label,
                need: k,
                have: mine.len(),
            });
        }
        for shot in mine.into_iter().take(k) {
            messages.push(Message::user(user_message(&shot.schema, &shot.question)));
            messages.push(Message {
                role: MessageRole::Assistant,
                content: format!("<scratch>\n{}\n</scratch>\n<result>{}</result>", shot.thoughts, shot.label.token()),
            });
        }
    }
    let mut req = ProviderRequest::new(Task::NineWayClassify, user_message(schema_md, question)).with_system_prompt(system);
    messages.append(&mut req.messages);
    req.messages = messages;
    Ok(req)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ValueMode {
    #[default]
    #[serde(rename = "lexicalOnly")]
    LexicalOnly,
    #[serde(rename = "lexicalAndOracle")]
    LexicalAndOracle,
}

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub k: usize,
    pub value_mode: ValueMode,
    pub db_dir: PathBuf,
    pub workdir: PathBuf,
    pub jobs: usize,
    pub link: LinkConfig,
}

impl ClassifyConfig {
    pub fn new(db_dir: impl Into<PathBuf>) -> ClassifyConfig {
        ClassifyConfig {
            k: 0,
            value_mode: ValueMode::LexicalOnly,
            db_dir: db_dir.into(),
            workdir: default_workdir(),
            jobs: default_jobs(),
            link: LinkConfig::default(),
        }
    }
}

/// Scores nine-way classification of each conversation's initial question.
pub fn run_classification(
    dataset: &[Conversation],
    provider: &dyn Provider,
    config: &ClassifyConfig,
) -> Result<EvalReport, BenchError> {
    build_classification_prompt("", "", config.k, bundled_shots())?;
    let store = DbStore::new(&config.db_dir);
    let outcomes = map_with_db(dataset, &store, &config.workdir, config.jobs, config.link.per_column_cap, |ctx, conv| {
        let Ok(ctx) = ctx else {
            return (conv.category, None, true);
        };
        let question = conv.initial_question();
        let mut values = retrieve_values(question, &ctx.index, &config.link);
        if config.value_mode == ValueMode::LexicalAndOracle {
            if let Some(record) = &conv.mutation {
                values = merge_values(values, oracle_values(record));
            }
        }
        let mut schema_md = ctx.schema_md.clone();
        let relevant = render_relevant_values(&values);
        if !relevant.is_empty() {
            schema_md.push_str("\nRelevant values:\n");
            schema_md.push_str(&relevant);
        }
        let req = build_classification_prompt(&schema_md, question, config.k, bundled_shots())
            .expect("shot count checked")
            .hint("gold_label", conv.category.token());
        match complete_result(provider, &req) {
            Ok(text) => (conv.category, CategoryLabel::from_token(&text), false),
            Err(e) => {
                log::warn!("{}: {e}", conv.id);
                (conv.category, None, true)
            }
        }
    });
    let failures = outcomes.iter().filter(|o| o.2).count();
    let mut report = EvalReport::from_predictions(outcomes.into_iter().map(|(g, p, _)| (g, p)));
    report.provider_failures = failures;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shot_is_one_message() {
        let req = build_classification_prompt("## t", "q?", 0, bundled_shots()).unwrap();
        assert_eq!(req.messages.len(), 1);
        assert!(req.messages[0].content.contains("<question>\nq?\n</question>"));
        assert!(req
            .system_prompt
            .contains("Multiple columns match the requested output information"));
        assert!(!req.system_prompt.contains("{category_with_explanation}"));
    }

    #[test]
    fn three_shots_make_27_pairs() {
        let req = build_classification_prompt("## t", "q?", 3, bundled_shots()).unwrap();
        assert_eq!(req.messages.len(), 27 * 2 + 1);
        for pair in req.messages[..54].chunks(2) {
            assert_eq!(pair[0].role, MessageRole::User);
            assert_eq!(pair[1].role, MessageRole::Assistant);
        }
    }

    #[test]
    fn four_shots_is_too_many() {
        let err = build_classification_prompt("", "", 4, bundled_shots()).unwrap_err();
        assert!(matches!(err, BenchError::InsufficientShots { have: 3, .. }));
    }
}
