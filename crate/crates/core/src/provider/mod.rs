//! Completion providers: an offline mock driven by fixtures and a live
//! chat-completions adapter.

mod live;
mod mock;
mod pylit;

pub use live::{LiveConfig, LiveProvider};
pub use mock::{MockBehavior, MockProvider};
pub use pylit::{parse_py_literal, PyLiteralError};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    SynonymColumns,
    SimilarValues,
    VaguifyQuestion,
    DisconnectedTables,
    FillClarification,
    Refine,
    ExplainResults,
    BinaryCategoryCheck,
    NineWayClassify,
    PredictSql,
    SchemaLinking,
    RankCandidates,
}

impl Task {
    /// The bundled system prompt for this task. Classification prompts still
    /// carry their `{category_with_explanation}` slot.
    pub fn prompt(self) -> &'static str {
        match self {
            Task::SynonymColumns => include_str!("../../fixtures/prompts/synonym_columns.txt"),
            Task::SimilarValues => include_str!("../../fixtures/prompts/similar_values.txt"),
            Task::VaguifyQuestion => include_str!("../../fixtures/prompts/vaguify_question.txt"),
            Task::DisconnectedTables => include_str!("../../fixtures/prompts/disconnected_tables.txt"),
            Task::FillClarification => include_str!("../../fixtures/prompts/fill_clarification.txt"),
            Task::Refine => include_str!("../../fixtures/prompts/refine.txt"),
            Task::ExplainResults => include_str!("../../fixtures/prompts/explain_results.txt"),
            Task::BinaryCategoryCheck => include_str!("../../fixtures/prompts/binary_classification.txt"),
            Task::NineWayClassify => include_str!("../../fixtures/prompts/nine_way_classification.txt"),
            Task::PredictSql => include_str!("../../fixtures/prompts/predict_sql.txt"),
            Task::SchemaLinking => include_str!("../../fixtures/prompts/schema_linking.txt"),
            Task::RankCandidates => include_str!("../../fixtures/prompts/rank_candidates.txt"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decode {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for Decode {
    fn default() -> Self {
        Decode {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub task: Task,
    pub system_prompt: String,
    pub messages: Vec<Message>,
    pub decode: Decode,
    /// Structured facts behind the prompt. Only the mock reads them; they are
    /// never sent over the wire.
    pub hints: BTreeMap<String, String>,
}

impl ProviderRequest {
    /// A request with the task's bundled prompt and a single user message.
    pub fn new(task: Task, user: impl Into<String>) -> Self {
        ProviderRequest {
            task,
            system_prompt: task.prompt().to_string(),
            messages: vec![Message::user(user)],
            decode: Decode::default(),
            hints: BTreeMap::new(),
        }
    }

    pub fn hint(mut self, key: &str, value: impl Into<String>) -> Self {
        self.hints.insert(key.to_string(), value.into());
        self
    }

    pub fn with_system_prompt(mut self, prompt: impl Into<String>) -> Self {
        self.system_prompt = prompt.into();
        self
    }

    pub(crate) fn get(&self, key: &str) -> &str {
        self.hints.get(key).map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub usage: Usage,
    pub provider_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider refused: {0}")]
    Refusal(String),
    #[error("rate limited after {attempts} attempts: {message}")]
    RateLimited { attempts: u32, message: String },
    #[error("no <{0}> span in provider output")]
    TagMissing(String),
}

pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for Arc<P> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}

/// Inner text of the first complete `<tag>...</tag>` span, trimmed.
pub fn parse_tagged(text: &str, tag: &str) -> Result<String, ProviderError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let missing = || ProviderError::TagMissing(tag.to_string());
    let end = text.find(&close).ok_or_else(missing)?;
    let start = text[..end].rfind(&open).ok_or_else(missing)? + open.len();
    Ok(text[start..end].trim().to_string())
}

/// Sends `request` and extracts its `<result>` span.
pub fn complete_result(provider: &dyn Provider, request: &ProviderRequest) -> Result<String, ProviderError> {
    let response = provider.complete(request)?;
    parse_tagged(&response.text, "result")
}

/// Builds a provider by name: `mock` or `live`.
pub fn from_name(name: &str, seed: u64) -> Result<Box<dyn Provider>, ProviderError> {
    match name {
        "mock" => Ok(Box::new(MockProvider::new(seed))),
        "live" => Ok(Box::new(LiveProvider::from_env()?)),
        other => Err(ProviderError::Refusal(format!("unknown provider `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_result() {
        let text = "<scratch>x</scratch><result>Answerable</result>";
        assert_eq!(parse_tagged(text, "result").unwrap(), "Answerable");
    }

    #[test]
    fn nested_duplicate_first_complete_span() {
        let text = "<result>outer <result> inner </result> tail</result>";
        assert_eq!(parse_tagged(text, "result").unwrap(), "inner");
        let text = "<result>a</result><result>b</result>";
        assert_eq!(parse_tagged(text, "result").unwrap(), "a");
    }

    #[test]
    fn missing_tag() {
        assert_eq!(
            parse_tagged("just text", "result"),
            Err(ProviderError::TagMissing("result".into()))
        );
        assert!(parse_tagged("</result><result>", "result").is_err());
    }

    #[test]
    fn decode_defaults() {
        let d = Decode::default();
        assert_eq!((d.temperature, d.top_p), (0.0, 1.0));
    }
}
