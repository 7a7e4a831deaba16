use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse, Task, Usage};
use crate::corpus::Cell;
use crate::sqlkit::ResultTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockBehavior {
    /// Classification tasks echo the `gold_label` hint, SQL prediction echoes `gold_sql`.
    Oracle,
    /// Classification tasks always answer with this token, SQL prediction with it as the query.
    Constant(String),
}

/// Deterministic provider backed by bundled fixtures and rule-based fallbacks.
#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
    behavior: MockBehavior,
    refuse: BTreeSet<Task>,
}

#[derive(Deserialize)]
struct Fixtures {
    #[allow(dead_code)]
    version: u32,
    synonym_columns: BTreeMap<String, Vec<String>>,
    similar_values: BTreeMap<String, Vec<String>>,
    vague_questions: BTreeMap<String, String>,
    disconnected_tables: BTreeMap<String, Value>,
    clarification_frames: BTreeMap<String, String>,
    explanations: BTreeMap<String, String>,
}

fn fixtures() -> &'static Fixtures {
    static F: OnceLock<Fixtures> = OnceLock::new();
    F.get_or_init(|| {
        serde_json::from_str(include_str!("../../fixtures/mock_provider.json")).expect("bundled mock fixture is valid")
    })
}

fn key(s: &str) -> String {
    s.trim().to_lowercase()
}

fn py_str(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn wrap(result: &str) -> String {
    format!("<scratch>mock</scratch>\n<result>{result}</result>")
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider {
            seed,
            behavior: MockBehavior::Oracle,
            refuse: BTreeSet::new(),
        }
    }

    pub fn with_behavior(mut self, behavior: MockBehavior) -> Self {
        self.behavior = behavior;
        self
    }

    /// Makes every request of `task` fail with a refusal.
    pub fn refusing(mut self, task: Task) -> Self {
        self.refuse.insert(task);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn answer(&self, req: &ProviderRequest) -> Result<String, ProviderError> {
        let f = fixtures();
        let text = match req.task {
            Task::SynonymColumns => {
                let (table, column) = (req.get("table"), req.get("column"));
                let names = f
                    .synonym_columns
                    .get(&key(column))
                    .cloned()
                    .unwrap_or_else(|| vec![format!("{column} (variant A)"), format!("{column} (variant B)")]);
                let items: Vec<String> = names
                    .iter()
                    .map(|n| format!("{{'table': {}, 'column': {}}}", py_str(table), py_str(n)))
                    .collect();
                wrap(&format!("[{}]", items.join(", ")))
            }
            Task::SimilarValues => {
                let value = req.get("value");
                let values = f
                    .similar_values
                    .get(&key(value))
                    .cloned()
                    .unwrap_or_else(|| vec![format!("{value} 1"), format!("{value} 2")]);
                let items: Vec<String> = values.iter().map(|v| py_str(v)).collect();
                wrap(&format!("[{}]", items.join(", ")))
            }
            Task::VaguifyQuestion => {
                let question = req.get("question");
                match f.vague_questions.get(question) {
                    Some(q) => wrap(q),
                    None => wrap(&vaguify(question, req.get("value"))),
                }
            }
            Task::DisconnectedTables => {
                let db_id = req.get("db_id");
                let value = f
                    .disconnected_tables
                    .get(db_id)
                    .cloned()
                    .unwrap_or_else(|| generic_tables(db_id, req.get("anchor_table")));
                wrap(&to_py(&value))
            }
            Task::FillClarification => {
                let frame = f
                    .clarification_frames
                    .get(req.get("category"))
                    .map(String::as_str)
                    .unwrap_or("{answer}");
                let (target, answer) = (req.get("target"), req.get("answer"));
                let text = if target.is_empty() && frame.contains("{target}") {
                    answer.to_string()
                } else {
                    frame.replace("{target}", target).replace("{answer}", answer)
                };
                wrap(&text)
            }
            Task::Refine => wrap(req.get("clarification")),
            Task::ExplainResults => {
                let table: ResultTable = serde_json::from_str(req.get("result")).unwrap_or_default();
                wrap(&explain(&table, &f.explanations))
            }
            Task::BinaryCategoryCheck | Task::NineWayClassify => match &self.behavior {
                MockBehavior::Oracle => wrap(req.get("gold_label")),
                MockBehavior::Constant(token) => wrap(token),
            },
            Task::PredictSql => match &self.behavior {
                MockBehavior::Oracle => format!("```sql\n{}\n```", req.get("gold_sql")),
                MockBehavior::Constant(sql) => format!("```sql\n{sql}\n```"),
            },
            Task::SchemaLinking => wrap(req.get("gold_links")),
            Task::RankCandidates => {
                let mut cands: Vec<(usize, &str)> = req
                    .get("candidates")
                    .split('\n')
                    .enumerate()
                    .map(|(i, c)| (i + 1, c))
                    .collect();
                cands.sort_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)));
                let order: Vec<String> = cands.iter().map(|(i, _)| i.to_string()).collect();
                wrap(&order.join(", "))
            }
        };
        Ok(text)
    }
}

impl Provider for MockProvider {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        if self.refuse.contains(&request.task) {
            return Err(ProviderError::Refusal(format!("mock refuses {:?}", request.task)));
        }
        let text = self.answer(request)?;
        let prompt_tokens = request.system_prompt.split_whitespace().count()
            + request.messages.iter().map(|m| m.content.split_whitespace().count()).sum::<usize>();
        Ok(ProviderResponse {
            usage: Usage {
                prompt_tokens: prompt_tokens as u64,
                completion_tokens: text.split_whitespace().count() as u64,
            },
            text,
            provider_id: self.id().to_string(),
        })
    }
}

/// Replaces the literal with a descriptive phrase, or refuses with an empty result.
fn vaguify(question: &str, value: &str) -> String {
    if value.is_empty() {
        return String::new();
    }
    let lower_q = question.to_lowercase();
    let Some(at) = lower_q.find(&value.to_lowercase()) else {
        return String::new();
    };
    let mut start = at;
    let mut end = at + value.len();
    let bytes = question.as_bytes();
    if start > 0 && end < bytes.len() && matches!(bytes[start - 1], b'\'' | b'"') && bytes[end] == bytes[start - 1] {
        start -= 1;
        end += 1;
    }
    let phrase = if value.parse::<f64>().is_ok() {
        "a typical amount"
    } else {
        "the one we talked about"
    };
    let head = &question[..start];
    let head = match head.len().checked_sub(4) {
        Some(cut) if phrase.starts_with("the ") && head.get(cut..).is_some_and(|w| w.eq_ignore_ascii_case("the ")) => {
            &head[..cut]
        }
        _ => head,
    };
    format!("{}{}{}", head, phrase, &question[end..])
}

fn generic_tables(db_id: &str, anchor: &str) -> Value {
    let stem = db_id.split('_').next().unwrap_or(db_id);
    let a = format!("{stem}_archive");
    let b = format!("{stem}_archive_note");
    let anchor = if anchor.is_empty() { "record" } else { anchor };
    json!({
        "tables": [
            {
                "name": a,
                "columns": [{"name": "archive_id", "type": "number"}, {"name": "label", "type": "text"}],
                "primary_key": "archive_id",
                "foreign_keys": [],
                "rows": [[1, "first box"], [2, "second box"], [3, "third box"]]
            },
            {
                "name": b,
                "columns": [
                    {"name": "note_id", "type": "number"},
                    {"name": "archive_id", "type": "number"},
                    {"name": "note", "type": "text"}
                ],
                "primary_key": "note_id",
                "foreign_keys": [{"column": "archive_id", "ref_table": a, "ref_column": "archive_id"}],
                "rows": [[1, 1, "intact"], [2, 2, "damaged"], [3, 3, "missing"]]
            }
        ],
        "question": format!("Which {anchor} entries are stored in the archive box labelled 'first box'?"),
        "joins": [a, anchor]
    })
}

fn to_py(v: &Value) -> String {
    match v {
        Value::Null => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => py_str(s),
        Value::Array(items) => format!("[{}]", items.iter().map(to_py).collect::<Vec<_>>().join(", ")),
        Value::Object(map) => format!(
            "{{{}}}",
            map.iter()
                .map(|(k, v)| format!("{}: {}", py_str(k), to_py(v)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn explain(table: &ResultTable, templates: &BTreeMap<String, String>) -> String {
    let t = |k: &str| templates.get(k).cloned().unwrap_or_default();
    let cell = |c: &Cell| c.to_string();
    match table.rows.as_slice() {
        [] => t("empty"),
        [row] if row.len() == 1 => t("single").replace("{value}", &cell(&row[0])),
        rows => {
            let first = rows[0].iter().map(cell).collect::<Vec<_>>().join(", ");
            let key = match (table.truncated, rows.len()) {
                (true, _) => "truncated_rows",
                (false, 1) => "one_row",
                _ => "rows",
            };
            t(key).replace("{n}", &rows.len().to_string()).replace("{first}", &first)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{complete_result, parse_py_literal};

    fn run(req: ProviderRequest) -> String {
        complete_result(&MockProvider::new(7), &req).unwrap()
    }

    #[test]
    fn capacity_synonyms_from_fixture() {
        let out = run(ProviderRequest::new(Task::SynonymColumns, "q")
            .hint("table", "stadium")
            .hint("column", "Capacity"));
        let v = parse_py_literal(&out).unwrap();
        let cols: Vec<&str> = v.as_array().unwrap().iter().map(|d| d["column"].as_str().unwrap()).collect();
        assert_eq!(cols, ["Standing Capacity", "Seating Capacity"]);
    }

    #[test]
    fn unknown_column_falls_back_to_variants() {
        let out = run(ProviderRequest::new(Task::SynonymColumns, "q")
            .hint("table", "t")
            .hint("column", "Foo"));
        assert!(out.contains("'Foo (variant A)'") && out.contains("'Foo (variant B)'"));
    }

    #[test]
    fn identical_requests_give_identical_responses() {
        let req = ProviderRequest::new(Task::SimilarValues, "q").hint("value", "Chemistry");
        let p = MockProvider::new(3);
        assert_eq!(p.complete(&req).unwrap(), p.complete(&req).unwrap());
        assert_eq!(run(req), "['Organic Chemistry', 'Physical Chemistry']");
    }

    #[test]
    fn vaguify_without_literal_refuses() {
        let out = run(ProviderRequest::new(Task::VaguifyQuestion, "q")
            .hint("question", "How many cars?")
            .hint("value", "Ford"));
        assert_eq!(out, "");
        let out = run(ProviderRequest::new(Task::VaguifyQuestion, "q")
            .hint("question", "Which singers are from 'France'?")
            .hint("value", "France"));
        assert_eq!(out, "Which singers are from the one we talked about?");
    }

    #[test]
    fn explanations() {
        let table = ResultTable {
            columns: vec!["count(*)".into()],
            rows: vec![vec![Cell::Integer(6)]],
            truncated: false,
        };
        let out = run(ProviderRequest::new(Task::ExplainResults, "q").hint("result", serde_json::to_string(&table).unwrap()));
        assert_eq!(out, "The answer is 6.");
        let out = run(ProviderRequest::new(Task::ExplainResults, "q").hint("result", serde_json::to_string(&ResultTable::default()).unwrap()));
        assert_eq!(out, "There are no rows matching your question.");
    }

    #[test]
    fn constant_behaviour() {
        let p = MockProvider::new(0).with_behavior(MockBehavior::Constant("answerable".into()));
        let req = ProviderRequest::new(Task::NineWayClassify, "q").hint("gold_label", "Unsupported_Join");
        assert_eq!(complete_result(&p, &req).unwrap(), "answerable");
    }

    #[test]
    fn disconnected_fixture_round_trips_through_python_literal() {
        let out = run(ProviderRequest::new(Task::DisconnectedTables, "q").hint("db_id", "course_teach"));
        let v = parse_py_literal(&out).unwrap();
        assert_eq!(v["tables"][0]["name"], "library");
        let out = run(ProviderRequest::new(Task::DisconnectedTables, "q").hint("db_id", "pets_1").hint("anchor_table", "Student"));
        let v = parse_py_literal(&out).unwrap();
        assert_eq!(v["tables"].as_array().unwrap().len(), 2);
    }
}
