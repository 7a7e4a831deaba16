use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CorpusError;
use crate::sqlkit;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusExample {
    pub example_id: String,
    pub db_id: String,
    pub question: String,
    pub gold_sql: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedExample {
    /// Position in the source list.
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExampleSet {
    pub examples: Vec<CorpusExample>,
    pub skipped: Vec<SkippedExample>,
}

/// Loads a Spider examples file (`dev.json` layout). Records with a missing field
/// or a gold query the SQL kit cannot parse are skipped and listed in `skipped`.
pub fn load_examples(path: &Path) -> Result<ExampleSet, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_examples(&text).map_err(|e| match e {
        CorpusError::Parse(m) => CorpusError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_examples(text: &str) -> Result<ExampleSet, CorpusError> {
    let raw: Vec<Value> = serde_json::from_str(text).map_err(|e| CorpusError::Parse(e.to_string()))?;
    let mut set = ExampleSet::default();
    for (index, record) in raw.iter().enumerate() {
        let field = |name: &str| record.get(name).and_then(Value::as_str).map(str::to_string);
        let (Some(db_id), Some(question), Some(query)) = (field("db_id"), field("question"), field("query")) else {
            set.skipped.push(SkippedExample {
                index,
                reason: "record lacks db_id, question or query".into(),
            });
            continue;
        };
        if let Err(e) = sqlkit::parse(&query) {
            log::debug!("skipping example {index}: {e}");
            set.skipped.push(SkippedExample {
                index,
                reason: e.to_string(),
            });
            continue;
        }
        set.examples.push(CorpusExample {
            example_id: format!("ex{index:05}"),
            db_id,
            question,
            gold_sql: query,
        });
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list() {
        let set = parse_examples("[]").unwrap();
        assert!(set.examples.is_empty() && set.skipped.is_empty());
    }

    #[test]
    fn missing_query_is_skipped() {
        let set = parse_examples(
            r#"[{"db_id": "a", "question": "q"},
                {"db_id": "a", "question": "How many singers do we have?", "query": "SELECT count(*) FROM singer"}]"#,
        )
        .unwrap();
        assert_eq!(set.skipped.len(), 1);
        assert_eq!(set.examples.len(), 1);
        assert_eq!(set.examples[0].example_id, "ex00001");
    }

    #[test]
    fn malformed_file() {
        assert!(matches!(parse_examples("{"), Err(CorpusError::Parse(_))));
    }
}
