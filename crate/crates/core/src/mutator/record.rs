use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Cell, ColumnRef, DbDelta};

/// The nine question categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CategoryLabel {
    AmbiguousSelectColumn,
    AmbiguousWhereColumn,
    AmbiguousValuesWithinColumn,
    AmbiguousFilterCriteria,
    NonexistentSelectColumn,
    NonexistentWhereColumn,
    NonexistentFilterValue,
    UnsupportedJoin,
    Answerable,
}

impl CategoryLabel {
    pub const ALL: [CategoryLabel; 9] = [
        CategoryLabel::AmbiguousSelectColumn,
        CategoryLabel::AmbiguousWhereColumn,
        CategoryLabel::AmbiguousValuesWithinColumn,
        CategoryLabel::AmbiguousFilterCriteria,
        CategoryLabel::NonexistentSelectColumn,
        CategoryLabel::NonexistentWhereColumn,
        CategoryLabel::NonexistentFilterValue,
        CategoryLabel::UnsupportedJoin,
        CategoryLabel::Answerable,
    ];

    /// The eight categories produced by mutation.
    pub const MUTATED: [CategoryLabel; 8] = [
        CategoryLabel::AmbiguousSelectColumn,
        CategoryLabel::AmbiguousWhereColumn,
        CategoryLabel::AmbiguousValuesWithinColumn,
        CategoryLabel::AmbiguousFilterCriteria,
        CategoryLabel::NonexistentSelectColumn,
        CategoryLabel::NonexistentWhereColumn,
        CategoryLabel::NonexistentFilterValue,
        CategoryLabel::UnsupportedJoin,
    ];

    /// Token used in classification prompts and serialized records.
    pub fn token(self) -> &'static str {
        match self {
            CategoryLabel::AmbiguousSelectColumn => "Ambiguous_SELECT_Column",
            CategoryLabel::AmbiguousWhereColumn => "Ambiguous_WHERE_Column",
            CategoryLabel::AmbiguousValuesWithinColumn => "Ambiguous_Values_Within_Column",
            CategoryLabel::AmbiguousFilterCriteria => "Ambiguous_Filter_Criteria",
            CategoryLabel::NonexistentSelectColumn => "Nonexistent_SELECT_Column",
            CategoryLabel::NonexistentWhereColumn => "Nonexistent_WHERE_Column",
            CategoryLabel::NonexistentFilterValue => "Nonexistent_Filter_Value",
            CategoryLabel::UnsupportedJoin => "Unsupported_Join",
            CategoryLabel::Answerable => "answerable",
        }
    }

    /// Human-readable name as used in tables.
    pub fn display_name(self) -> &'static str {
        match self {
            CategoryLabel::AmbiguousSelectColumn => "Ambiguous SELECT Column",
            CategoryLabel::AmbiguousWhereColumn => "Ambiguous WHERE Column",
            CategoryLabel::AmbiguousValuesWithinColumn => "Ambiguous Values Within Column",
            CategoryLabel::AmbiguousFilterCriteria => "Ambiguous Filter Criteria",
            CategoryLabel::NonexistentSelectColumn => "Nonexistent SELECT Column",
            CategoryLabel::NonexistentWhereColumn => "Nonexistent WHERE Column",
            CategoryLabel::NonexistentFilterValue => "Nonexistent Filter Value",
            CategoryLabel::UnsupportedJoin => "Unsupported Join",
            CategoryLabel::Answerable => "Answerable",
        }
    }

    /// Short slug used in conversation ids.
    pub fn slug(self) -> &'static str {
        match self {
            CategoryLabel::AmbiguousSelectColumn => "amb-select",
            CategoryLabel::AmbiguousWhereColumn => "amb-where",
            CategoryLabel::AmbiguousValuesWithinColumn => "amb-values",
            CategoryLabel::AmbiguousFilterCriteria => "amb-filter",
            CategoryLabel::NonexistentSelectColumn => "nx-select",
            CategoryLabel::NonexistentWhereColumn => "nx-where",
            CategoryLabel::NonexistentFilterValue => "nx-value",
            CategoryLabel::UnsupportedJoin => "nx-join",
            CategoryLabel::Answerable => "answerable",
        }
    }

    pub fn is_ambiguous(self) -> bool {
        matches!(
            self,
            CategoryLabel::AmbiguousSelectColumn
                | CategoryLabel::AmbiguousWhereColumn
                | CategoryLabel::AmbiguousValuesWithinColumn
                | CategoryLabel::AmbiguousFilterCriteria
        )
    }

    /// Matches a category token case-insensitively, ignoring surrounding space
    /// and treating spaces like underscores.
    pub fn from_token(text: &str) -> Option<CategoryLabel> {
        let norm = text.trim().replace(' ', "_");
        CategoryLabel::ALL
            .into_iter()
            .find(|c| c.token().eq_ignore_ascii_case(&norm))
    }
}

impl fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for CategoryLabel {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CategoryLabel::from_token(s).ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl Serialize for CategoryLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for CategoryLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        // exact tokens only; loose matching is for model output
        CategoryLabel::ALL
            .into_iter()
            .find(|c| c.token() == text)
            .ok_or_else(|| serde::de::Error::custom(UnknownCategory(text)))
    }
}

/// What the mutation is about: a column, or a value within a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub column: ColumnRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Introduced {
    Column(ColumnRef),
    Value(Cell),
    Table(String),
}

impl Introduced {
    /// Text a user would use to name this item.
    pub fn mention(&self) -> String {
        match self {
            Introduced::Column(c) => c.column.clone(),
            Introduced::Value(v) => v.to_string(),
            Introduced::Table(t) => t.clone(),
        }
    }
}

/// One clarified SQL and the column or value it commits to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarifiedCandidate {
    pub sql: String,
    /// Text the user clarification must mention; empty when nothing specific is named.
    pub target: String,
    /// Corpus question paired with `sql`, when it was borrowed from another example.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

impl ClarifiedCandidate {
    pub fn new(sql: impl Into<String>, target: impl Into<String>) -> Self {
        ClarifiedCandidate {
            sql: sql.into(),
            target: target.into(),
            question: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub category: CategoryLabel,
    pub seed_example_id: String,
    pub seed_question: String,
    pub seed_sql: String,
    pub target: Option<Target>,
    pub introduced: Vec<Introduced>,
    pub mutated_question: String,
    /// Removed columns.
    pub removed: Vec<ColumnRef>,
    /// Added columns.
    pub added: Vec<ColumnRef>,
    /// Values the category hinges on, keyed `table.column`.
    pub value_map: BTreeMap<String, Vec<Cell>>,
    pub deltas: Vec<DbDelta>,
    pub clarified_sql_candidates: Vec<ClarifiedCandidate>,
    /// Text the clarification turn should carry when it is fixed by the category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_clarification: Option<String>,
    /// New table and original table an unsupported join would need.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub join_tables: Vec<String>,
}

impl MutationRecord {
    pub fn introduced_columns(&self) -> Vec<&ColumnRef> {
        self.introduced
            .iter()
            .filter_map(|i| match i {
                Introduced::Column(c) => Some(c),
                _ => None,
            })
            .collect()
    }

    pub fn introduced_values(&self) -> Vec<&Cell> {
        self.introduced
            .iter()
            .filter_map(|i| match i {
                Introduced::Value(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    pub fn introduced_tables(&self) -> Vec<&str> {
        self.introduced
            .iter()
            .filter_map(|i| match i {
                Introduced::Table(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Checks the per-category shape of the record.
    pub fn check_shape(&self) -> Result<(), String> {
        let n_cand = self.clarified_sql_candidates.len();
        match self.category {
            CategoryLabel::AmbiguousSelectColumn | CategoryLabel::AmbiguousWhereColumn => {
                if self.introduced_columns().len() != 2 || n_cand != 2 {
                    return Err("ambiguous column records need 2 columns and 2 candidates".into());
                }
            }
            CategoryLabel::AmbiguousValuesWithinColumn => {
                if self.introduced_values().len() != 2 || n_cand != 2 {
                    return Err("ambiguous value records need 2 values and 2 candidates".into());
                }
            }
            CategoryLabel::NonexistentSelectColumn
            | CategoryLabel::NonexistentWhereColumn
            | CategoryLabel::NonexistentFilterValue
            | CategoryLabel::UnsupportedJoin
            | CategoryLabel::AmbiguousFilterCriteria => {
                if n_cand != 1 {
                    return Err("record needs exactly 1 clarified candidate".into());
                }
            }
            CategoryLabel::Answerable => {}
        }
        match self.category {
            CategoryLabel::AmbiguousFilterCriteria => {
                if !self.deltas.is_empty() {
                    return Err("filter-criteria records leave the database unchanged".into());
                }
                if self.mutated_question == self.seed_question {
                    return Err("filter-criteria records must change the question".into());
                }
            }
            CategoryLabel::UnsupportedJoin => {
                if self.introduced_tables().len() < 2 {
                    return Err("unsupported-join records add at least 2 tables".into());
                }
            }
            _ => {
                if self.mutated_question != self.seed_question {
                    return Err("question must be unchanged for this category".into());
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn column_key(c: &ColumnRef) -> String {
    format!("{}.{}", c.table, c.column)
}
