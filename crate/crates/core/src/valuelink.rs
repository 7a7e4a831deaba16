//! Question-to-cell value linking.
//!
//! [`retrieve_values`] is the fuzzy lexical matcher; [`oracle_values`] gives the values a
//! mutation actually hinges on.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{quote, Cell, ColType, ColumnRef, CorpusError, DatabaseHandle, SchemaDef};
use crate::mutator::MutationRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub threshold: f64,
    pub max_ngram: usize,
    pub top_k: usize,
    /// Distinct values indexed per column.
    pub per_column_cap: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            threshold: 0.6,
            max_ngram: 5,
            top_k: 4,
            per_column_cap: 2000,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    raw: String,
    norm: String,
}

/// Distinct text values of every text column.
#[derive(Debug, Clone, Default)]
pub struct ValueIndex {
    columns: BTreeMap<ColumnRef, Vec<Entry>>,
}

impl ValueIndex {
    pub fn build(handle: &DatabaseHandle, schema: &SchemaDef, cap: usize) -> Result<ValueIndex, CorpusError> {
        let mut columns = BTreeMap::new();
        for (col, ty) in schema.all_columns() {
            if ty != ColType::Text {
                continue;
            }
            let sql = format!(
                "SELECT DISTINCT {c} FROM {t} WHERE typeof({c}) = 'text' LIMIT {cap}",
                c = quote(&col.column),
                t = quote(&col.table)
            );
            let mut stmt = handle.connection().prepare(&sql)?;
            let values = stmt
                .query_map([], |r| r.get::<_, String>(0))?
                .collect::<Result<Vec<_>, _>>()?;
            let entries = values
                .into_iter()
                .map(|raw| Entry { norm: normalize(&raw), raw })
                .filter(|e| !e.norm.is_empty())
                .collect();
            columns.insert(col, entries);
        }
        Ok(ValueIndex { columns })
    }

    pub fn values(&self, col: &ColumnRef) -> impl Iterator<Item = &str> {
        self.columns.get(col).into_iter().flatten().map(|e| e.raw.as_str())
    }

    pub fn len(&self) -> usize {
        self.columns.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Lowercase, punctuation as spaces, single-spaced.
pub fn normalize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn trigrams(s: &str) -> BTreeSet<Vec<char>> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < 3 {
        return [chars].into_iter().collect();
    }
    chars.windows(3).map(<[char]>::to_vec).collect()
}

fn similarity_normalized(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let edit = strsim::normalized_levenshtein(a, b);
    let tri = jaccard(&trigrams(a), &trigrams(b));
    let tokens = jaccard(&a.split(' ').collect(), &b.split(' ').collect());
    edit.max(tri).max(tokens)
}

/// Symmetric score in [0, 1]; 1.0 when both sides normalize to the same string.
pub fn similarity(a: &str, b: &str) -> f64 {
    similarity_normalized(&normalize(a), &normalize(b))
}

fn ngrams(question: &str, max_n: usize) -> Vec<String> {
    let tokens: Vec<&str> = question.split(' ').filter(|t| !t.is_empty()).collect();
    let mut out = BTreeSet::new();
    for n in 1..=max_n.min(tokens.len()) {
        for w in tokens.windows(n) {
            out.insert(w.join(" "));
        }
    }
    out.into_iter().collect()
}

/// Numbers and short codes only link on an exact n-gram.
fn exact_only(s: &str) -> bool {
    s.parse::<f64>().is_ok() || s.chars().count() <= 3
}

/// Per column, the values most similar to some question n-gram.
pub fn retrieve_values(question: &str, index: &ValueIndex, config: &LinkConfig) -> BTreeMap<ColumnRef, Vec<Cell>> {
    let grams = ngrams(&normalize(question), config.max_ngram);
    let mut out = BTreeMap::new();
    if grams.is_empty() {
        return out;
    }
    for (col, entries) in &index.columns {
        let mut scored: Vec<(f64, &str)> = entries
            .iter()
            .filter_map(|e| {
                let score = if exact_only(&e.norm) {
                    if grams.contains(&e.norm) { 1.0 } else { 0.0 }
                } else {
                    grams.iter().map(|g| similarity_normalized(g, &e.norm)).fold(0.0, f64::max)
                };
                (score >= config.threshold).then_some((score, e.raw.as_str()))
            })
            .collect();
        if scored.is_empty() {
            continue;
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored.truncate(config.top_k);
        out.insert(col.clone(), scored.into_iter().map(|(_, v)| Cell::Text(v.to_string())).collect());
    }
    out
}

/// The values the mutation's category depends on.
pub fn oracle_values(record: &MutationRecord) -> BTreeMap<ColumnRef, Vec<Cell>> {
    record
        .value_map
        .iter()
        .filter_map(|(key, cells)| {
            let (table, column) = key.split_once('.')?;
            Some((ColumnRef::new(table, column), cells.clone()))
        })
        .collect()
}

/// Lexical values merged with oracle values, oracle first, without duplicates.
pub fn merge_values(
    lexical: BTreeMap<ColumnRef, Vec<Cell>>,
    oracle: BTreeMap<ColumnRef, Vec<Cell>>,
) -> BTreeMap<ColumnRef, Vec<Cell>> {
    let mut out = oracle;
    for (col, cells) in lexical {
        let slot = out.entry(col).or_default();
        for c in cells {
            if !slot.contains(&c) {
                slot.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(cols: &[(&str, &str, &[&str])]) -> ValueIndex {
        let columns = cols
            .iter()
            .map(|(t, c, vals)| {
                let entries = vals
                    .iter()
                    .map(|v| Entry {
                        raw: v.to_string(),
                        norm: normalize(v),
                    })
                    .collect();
                (ColumnRef::new(*t, *c), entries)
            })
            .collect();
        ValueIndex { columns }
    }

    #[test]
    fn english_channel_hits_both_columns() {
        let idx = index(&[
            ("ship", "Port_of_Origin", &["English Channel", "Atlantic"]),
            ("ship", "Destination", &["English Channel", "Baltic"]),
            ("ship", "name", &["Mary"]),
        ]);
        let got = retrieve_values("ships lost in the 'English Channel'?", &idx, &LinkConfig::default());
        assert_eq!(got.len(), 2);
        for cells in got.values() {
            assert_eq!(cells, &vec![Cell::Text("English Channel".into())]);
        }
    }

    #[test]
    fn useful_cv_variants() {
        let idx = index(&[(
            "Templates",
            "Template_Type_Code",
            &["useful CV 1", "useful CV 2", "useful professional CV", "Presentation"],
        )]);
        let got = retrieve_values("How many templates are useful CV?", &idx, &LinkConfig::default());
        let vals: BTreeSet<String> = got.values().flatten().map(|c| c.to_string()).collect();
        assert_eq!(
            vals,
            ["useful CV 1", "useful CV 2", "useful professional CV"]
                .into_iter()
                .map(String::from)
                .collect()
        );
    }

    #[test]
    fn empty_question() {
        let idx = index(&[("t", "c", &["x"])]);
        assert!(retrieve_values("", &idx, &LinkConfig::default()).is_empty());
    }

    #[test]
    fn numbers_match_exactly() {
        let idx = index(&[("t", "c", &["1999", "1998"])]);
        let got = retrieve_values("released in 1999", &idx, &LinkConfig::default());
        assert_eq!(got.values().next().unwrap(), &vec![Cell::Text("1999".into())]);
    }

    #[test]
    fn similarity_basics() {
        assert_eq!(similarity("Organic-Chemistry", "organic chemistry"), 1.0);
        assert!((similarity("abc", "abd") - similarity("abd", "abc")).abs() < 1e-12);
        assert_eq!(similarity("", "x"), 0.0);
    }
}
