use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Coarse column typing, as in the Spider catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColType {
    Text,
    Number,
    Time,
    Boolean,
    Others,
}

impl ColType {
    pub fn from_catalog(s: &str) -> ColType {
        match s.to_ascii_lowercase().as_str() {
            "text" => ColType::Text,
            "number" => ColType::Number,
            "time" => ColType::Time,
            "boolean" => ColType::Boolean,
            _ => ColType::Others,
        }
    }

    pub fn catalog_name(self) -> &'static str {
        match self {
            ColType::Text => "text",
            ColType::Number => "number",
            ColType::Time => "time",
            ColType::Boolean => "boolean",
            ColType::Others => "others",
        }
    }

    /// Maps a declared SQLite column type onto the coarse typing.
    pub fn from_declared(decl: &str) -> ColType {
        let d = decl.to_ascii_uppercase();
        if d.contains("BOOL") {
            ColType::Boolean
        } else if d.contains("DATE") || d.contains("TIME") || d.contains("YEAR") {
            ColType::Time
        } else if d.contains("INT")
            || d.contains("REAL")
            || d.contains("FLOA")
            || d.contains("DOUB")
            || d.contains("NUM")
            || d.contains("DEC")
        {
            ColType::Number
        } else if d.contains("CHAR") || d.contains("TEXT") || d.contains("CLOB") {
            ColType::Text
        } else if d.is_empty() {
            ColType::Text
        } else {
            ColType::Others
        }
    }

    /// Declared type used when this crate creates a column.
    pub fn declared(self) -> &'static str {
        match self {
            ColType::Text => "TEXT",
            ColType::Number => "NUMERIC",
            ColType::Time => "DATETIME",
            ColType::Boolean => "BOOLEAN",
            ColType::Others => "BLOB",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub col_type: ColType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

impl TableDef {
    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// `table.column`, compared case-insensitively.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            table: table.into(),
            column: column.into(),
        }
    }

    fn key(&self) -> (String, String) {
        (self.table.to_lowercase(), self.column.to_lowercase())
    }
}

impl PartialEq for ColumnRef {
    fn eq(&self, other: &Self) -> bool {
        self.table.eq_ignore_ascii_case(&other.table)
            && self.column.eq_ignore_ascii_case(&other.column)
    }
}

impl Eq for ColumnRef {}

impl std::hash::Hash for ColumnRef {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for ColumnRef {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ColumnRef {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: ColumnRef,
    pub to: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDef {
    pub db_id: String,
    pub tables: Vec<TableDef>,
    pub primary_keys: Vec<ColumnRef>,
    pub foreign_keys: Vec<ForeignKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(ColumnRef),
    #[error("empty column name in table `{0}`")]
    EmptyColumnName(String),
    #[error("key column `{0}` does not resolve")]
    DanglingKey(ColumnRef),
}

impl SchemaDef {
    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn has_column(&self, col: &ColumnRef) -> bool {
        self.column_type(col).is_some()
    }

    pub fn column_type(&self, col: &ColumnRef) -> Option<ColType> {
        self.table(&col.table)
            .and_then(|t| t.column(&col.column))
            .map(|c| c.col_type)
    }

    /// Canonical spelling of a column reference as stored in the schema.
    pub fn canonical(&self, col: &ColumnRef) -> Option<ColumnRef> {
        let table = self.table(&col.table)?;
        let column = table.column(&col.column)?;
        Some(ColumnRef::new(table.name.clone(), column.name.clone()))
    }

    pub fn is_primary_key(&self, col: &ColumnRef) -> bool {
        self.primary_keys.contains(col)
    }

    /// Primary-key or foreign-key participant.
    pub fn is_key(&self, col: &ColumnRef) -> bool {
        self.is_primary_key(col)
            || self
                .foreign_keys
                .iter()
                .any(|fk| &fk.from == col || &fk.to == col)
    }

    pub fn all_columns(&self) -> impl Iterator<Item = (ColumnRef, ColType)> + '_ {
        self.tables.iter().flat_map(|t| {
            t.columns
                .iter()
                .map(move |c| (ColumnRef::new(t.name.clone(), c.name.clone()), c.col_type))
        })
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = BTreeSet::new();
        for t in &self.tables {
            if !seen.insert(t.name.to_lowercase()) {
                return Err(SchemaError::DuplicateTable(t.name.clone()));
            }
            let mut cols = BTreeSet::new();
            for c in &t.columns {
                if c.name.is_empty() {
                    return Err(SchemaError::EmptyColumnName(t.name.clone()));
                }
                if !cols.insert(c.name.to_lowercase()) {
                    return Err(SchemaError::DuplicateColumn(ColumnRef::new(
                        t.name.clone(),
                        c.name.clone(),
                    )));
                }
            }
        }
        let keys = self
            .primary_keys
            .iter()
            .chain(self.foreign_keys.iter().flat_map(|fk| [&fk.from, &fk.to]));
        for k in keys {
            if !self.has_column(k) {
                return Err(SchemaError::DanglingKey(k.clone()));
            }
        }
        Ok(())
    }

    /// Connected components of the foreign-key graph over tables.
    pub fn fk_components(&self) -> usize {
        let index: BTreeMap<String, usize> = self
            .tables
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.to_lowercase(), i))
            .collect();
        let mut parent: Vec<usize> = (0..self.tables.len()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut root = x;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = x;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        for fk in &self.foreign_keys {
            let (Some(&a), Some(&b)) = (
                index.get(&fk.from.table.to_lowercase()),
                index.get(&fk.to.table.to_lowercase()),
            ) else {
                continue;
            };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..self.tables.len())
            .filter(|&i| find(&mut parent, i) == i)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> SchemaDef {
        SchemaDef {
            db_id: "s".into(),
            tables: vec![
                TableDef {
                    name: "a".into(),
                    columns: vec![ColumnDef {
                        name: "id".into(),
                        col_type: ColType::Number,
                    }],
                },
                TableDef {
                    name: "b".into(),
                    columns: vec![ColumnDef {
                        name: "a_id".into(),
                        col_type: ColType::Number,
                    }],
                },
                TableDef {
                    name: "c".into(),
                    columns: vec![],
                },
            ],
            primary_keys: vec![ColumnRef::new("a", "id")],
            foreign_keys: vec![ForeignKey {
                from: ColumnRef::new("b", "a_id"),
                to: ColumnRef::new("a", "id"),
            }],
        }
    }

    #[test]
    fn components_count_isolated_tables() {
        assert_eq!(schema().fk_components(), 2);
    }

    #[test]
    fn column_refs_compare_case_insensitively() {
        assert_eq!(ColumnRef::new("Stadium", "CAPACITY"), ColumnRef::new("stadium", "Capacity"));
        assert!(schema().is_key(&ColumnRef::new("B", "A_ID")));
    }

    #[test]
    fn dangling_key_rejected() {
        let mut s = schema();
        s.primary_keys.push(ColumnRef::new("c", "nope"));
        assert!(matches!(s.validate(), Err(SchemaError::DanglingKey(_))));
    }

    #[test]
    fn duplicate_column_rejected_case_insensitively() {
        let mut s = schema();
        s.tables[0].columns.push(ColumnDef {
            name: "ID".into(),
            col_type: ColType::Text,
        });
        assert!(matches!(s.validate(), Err(SchemaError::DuplicateColumn(_))));
    }
}
