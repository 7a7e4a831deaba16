use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ColType, ColumnDef, ColumnRef, CorpusError, ForeignKey, SchemaDef, TableDef};

#[derive(Debug, Serialize, Deserialize)]
struct RawEntry {
    db_id: String,
    #[serde(default)]
    table_names_original: Vec<String>,
    #[serde(default)]
    table_names: Vec<String>,
    #[serde(default)]
    column_names_original: Vec<(i64, String)>,
    #[serde(default)]
    column_names: Vec<(i64, String)>,
    #[serde(default)]
    column_types: Vec<String>,
    #[serde(default)]
    primary_keys: Vec<Value>,
    #[serde(default)]
    foreign_keys: Vec<(i64, i64)>,
}

/// Loads a `tables.json`-style catalog.
pub fn load_catalog(path: &Path) -> Result<Vec<SchemaDef>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let raw: Vec<RawEntry> =
        serde_json::from_str(&text).map_err(|e| CorpusError::Parse(format!("{}: {e}", path.display())))?;
    raw.into_iter().map(resolve).collect()
}

fn resolve(raw: RawEntry) -> Result<SchemaDef, CorpusError> {
    let err = |message: String| CorpusError::Resolution {
        db_id: raw.db_id.clone(),
        message,
    };
    let tables_src = if raw.table_names_original.is_empty() {
        &raw.table_names
    } else {
        &raw.table_names_original
    };
    let cols_src = if raw.column_names_original.is_empty() {
        &raw.column_names
    } else {
        &raw.column_names_original
    };
    let mut tables: Vec<TableDef> = tables_src
        .iter()
        .map(|name| TableDef {
            name: name.clone(),
            columns: Vec::new(),
        })
        .collect();
    // index into cols_src -> resolved ref (None for the `*` pseudo-column)
    let mut refs: Vec<Option<ColumnRef>> = Vec::with_capacity(cols_src.len());
    for (i, (table_idx, name)) in cols_src.iter().enumerate() {
        if *table_idx < 0 {
            refs.push(None);
            continue;
        }
        let table = tables
            .get_mut(*table_idx as usize)
            .ok_or_else(|| err(format!("column {i} names table index {table_idx} out of range")))?;
        let col_type = raw
            .column_types
            .get(i)
            .map(|t| ColType::from_catalog(t))
            .unwrap_or(ColType::Others);
        table.columns.push(ColumnDef {
            name: name.clone(),
            col_type,
        });
        refs.push(Some(ColumnRef::new(table.name.clone(), name.clone())));
    }
    let lookup = |idx: i64| -> Result<ColumnRef, CorpusError> {
        usize::try_from(idx)
            .ok()
            .and_then(|i| refs.get(i).cloned().flatten())
            .ok_or_else(|| err(format!("key column index {idx} out of range")))
    };
    let mut primary_keys = Vec::new();
    for pk in &raw.primary_keys {
        let indices: Vec<i64> = match pk {
            Value::Number(n) => vec![n.as_i64().ok_or_else(|| err(format!("bad key index {n}")))?],
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_i64().ok_or_else(|| err(format!("bad key index {v}"))))
                .collect::<Result<_, _>>()?,
            other => return Err(err(format!("bad primary key entry {other}"))),
        };
        for i in indices {
            primary_keys.push(lookup(i)?);
        }
    }
    let foreign_keys = raw
        .foreign_keys
        .iter()
        .map(|&(from, to)| {
            Ok(ForeignKey {
                from: lookup(from)?,
                to: lookup(to)?,
            })
        })
        .collect::<Result<Vec<_>, CorpusError>>()?;
    let schema = SchemaDef {
        db_id: raw.db_id.clone(),
        tables,
        primary_keys,
        foreign_keys,
    };
    schema.validate().map_err(|e| err(e.to_string()))?;
    Ok(schema)
}

/// Catalog JSON entry for `schema`, in the same layout [`load_catalog`] reads.
pub fn catalog_entry(schema: &SchemaDef) -> Value {
    let mut columns = vec![(-1i64, "*".to_string())];
    let mut types = vec!["text".to_string()];
    for (ti, t) in schema.tables.iter().enumerate() {
        for c in &t.columns {
            columns.push((ti as i64, c.name.clone()));
            types.push(c.col_type.catalog_name().to_string());
        }
    }
    let index = |r: &ColumnRef| {
        columns
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, (ti, name))| {
                schema.tables[*ti as usize].name.eq_ignore_ascii_case(&r.table) && name.eq_ignore_ascii_case(&r.column)
            })
            .map(|(i, _)| i as i64)
    };
    let pks: Vec<Value> = schema
        .primary_keys
        .iter()
        .filter_map(index)
        .map(Value::from)
        .collect();
    let fks: Vec<(i64, i64)> = schema
        .foreign_keys
        .iter()
        .filter_map(|fk| Some((index(&fk.from)?, index(&fk.to)?)))
        .collect();
    let names: Vec<String> = schema.tables.iter().map(|t| t.name.clone()).collect();
    let entry = RawEntry {
        db_id: schema.db_id.clone(),
        table_names: names.iter().map(|n| n.to_lowercase().replace('_', " ")).collect(),
        table_names_original: names,
        column_names: columns
            .iter()
            .map(|(t, n)| (*t, n.to_lowercase().replace('_', " ")))
            .collect(),
        column_names_original: columns,
        column_types: types,
        primary_keys: pks,
        foreign_keys: fks,
    };
    serde_json::to_value(entry).expect("catalog entry serialises")
}

pub fn write_catalog(path: &Path, schemas: &[SchemaDef]) -> Result<(), CorpusError> {
    let entries: Vec<Value> = schemas.iter().map(catalog_entry).collect();
    let text = serde_json::to_string_pretty(&entries).expect("catalog serialises");
    std::fs::write(path, text).map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<Vec<SchemaDef>, CorpusError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tables.json");
        std::fs::write(&path, text).unwrap();
        load_catalog(&path)
    }

    const STADIUM: &str = r#"[{
        "db_id": "concert_singer",
        "table_names_original": ["stadium", "concert"],
        "column_names_original": [[-1, "*"], [0, "Stadium_ID"], [0, "Capacity"], [1, "concert_ID"], [1, "Stadium_ID"]],
        "column_types": ["text", "number", "number", "number", "text"],
        "primary_keys": [1, 3],
        "foreign_keys": [[4, 1]]
    }]"#;

    #[test]
    fn stadium_has_capacity() {
        let schemas = load_str(STADIUM).unwrap();
        let s = &schemas[0];
        assert!(s.table("stadium").unwrap().column("Capacity").is_some());
        assert_eq!(s.foreign_keys[0].to, ColumnRef::new("stadium", "Stadium_ID"));
        assert_eq!(s.column_type(&ColumnRef::new("stadium", "capacity")), Some(ColType::Number));
    }

    #[test]
    fn empty_table_list() {
        let s = load_str(r#"[{"db_id": "e", "table_names_original": [], "column_names_original": [[-1, "*"]],
            "column_types": ["text"], "primary_keys": [], "foreign_keys": []}]"#)
        .unwrap();
        assert!(s[0].tables.is_empty() && s[0].primary_keys.is_empty());
    }

    #[test]
    fn fk_index_out_of_range() {
        let text = STADIUM.replace("[[4, 1]]", "[[4, 9]]");
        assert!(matches!(load_str(&text), Err(CorpusError::Resolution { .. })));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(load_str("[{"), Err(CorpusError::Parse(_))));
    }

    #[test]
    fn composite_keys_and_round_trip() {
        let text = STADIUM.replace("[1, 3]", "[[1, 2], 3]");
        let schemas = load_str(&text).unwrap();
        assert_eq!(schemas[0].primary_keys.len(), 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_catalog(&path, &schemas).unwrap();
        assert_eq!(load_catalog(&path).unwrap(), schemas);
    }
}
