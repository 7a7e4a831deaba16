use std::collections::BTreeMap;
use std::fmt::Write;

use crate::corpus::{quote, Cell, ColType, ColumnRef, CorpusError, DatabaseHandle, SchemaDef};

/// Up to `n` distinct non-null values per column, in storage order.
pub fn sample_values(
    handle: &DatabaseHandle,
    schema: &SchemaDef,
    n: usize,
) -> Result<BTreeMap<ColumnRef, Vec<Cell>>, CorpusError> {
    let mut out = BTreeMap::new();
    for (col, _) in schema.all_columns() {
        let sql = format!(
            "SELECT DISTINCT {c} FROM {t} WHERE {c} IS NOT NULL LIMIT {n}",
            c = quote(&col.column),
            t = quote(&col.table)
        );
        let mut stmt = handle.connection().prepare(&sql)?;
        let values: Vec<Cell> = stmt
            .query_map([], |r| Ok(Cell::from_value_ref(r.get_ref(0)?)))?
            .collect::<Result<_, _>>()?;
        out.insert(col, values);
    }
    Ok(out)
}

fn type_name(t: ColType, samples: &[Cell]) -> &'static str {
    match t {
        ColType::Number if samples.iter().any(|c| matches!(c, Cell::Real(_))) => "float",
        ColType::Number => "int",
        ColType::Boolean => "bool",
        ColType::Text | ColType::Time | ColType::Others => "str",
    }
}

/// One `## table` section per table with a row per column and up to three
/// example values, in schema order.
pub fn render_schema_markdown(schema: &SchemaDef, samples: &BTreeMap<ColumnRef, Vec<Cell>>) -> String {
    let mut out = String::new();
    for table in &schema.tables {
        let _ = writeln!(out, "## {}\n", table.name);
        out.push_str("| Column Name | Data Type | Description |\n| --- | --- | --- |\n");
        for col in &table.columns {
            let key = ColumnRef::new(table.name.clone(), col.name.clone());
            let values = samples.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            let shown: Vec<String> = values.iter().take(3).map(|v| v.to_string().replace('|', "/")).collect();
            let _ = writeln!(
                out,
                "| {} | {} | Example values: {} |",
                col.name,
                type_name(col.col_type, values),
                shown.join(", ")
            );
        }
        out.push('\n');
    }
    if !schema.foreign_keys.is_empty() {
        let fks: Vec<String> = schema.foreign_keys.iter().map(|fk| format!("{} = {}", fk.from, fk.to)).collect();
        let _ = writeln!(out, "Foreign keys: {}\n", fks.join(", "));
    }
    out
}

/// `"table.column": ["v1", "v2"]` lines for retrieved or oracle values.
pub fn render_relevant_values(values: &BTreeMap<ColumnRef, Vec<Cell>>) -> String {
    let mut out = String::new();
    for (col, cells) in values {
        if cells.is_empty() {
            continue;
        }
        let items: Vec<String> = cells
            .iter()
            .map(|c| serde_json::to_string(&c.to_string()).expect("string serialises"))
            .collect();
        let _ = writeln!(out, "\"{}\": [{}]", col, items.join(", "));
    }
    out
}
