use rusqlite::{params_from_iter, Connection};
use serde::{Deserialize, Serialize};

use super::store::quote;
use super::{introspect, Cell, ColType, ColumnDef, ColumnRef, CorpusError, DatabaseHandle, ForeignKey, SchemaDef};

/// A table created by [`DbDelta::CreateTables`], with its rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewTable {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_key: Option<String>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKey>,
    #[serde(default)]
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum DbDelta {
    RemoveColumn {
        column: ColumnRef,
    },
    /// `values` are aligned with the table's rows in storage order; empty means NULL.
    AddColumn {
        column: ColumnRef,
        col_type: ColType,
        values: Vec<Cell>,
    },
    ReplaceCellValues {
        column: ColumnRef,
        old_value: Cell,
        new_values: Vec<Cell>,
    },
    DeleteRowsByValue {
        column: ColumnRef,
        value: Cell,
    },
    CreateTables {
        tables: Vec<NewTable>,
    },
}

fn conflict(msg: impl Into<String>) -> CorpusError {
    CorpusError::DeltaConflict(msg.into())
}

fn resolve(schema: &SchemaDef, col: &ColumnRef) -> Result<ColumnRef, CorpusError> {
    schema
        .canonical(col)
        .ok_or_else(|| conflict(format!("column {col} does not exist")))
}

/// Applies one delta to a working copy and returns the schema read back from it.
pub fn apply_delta(handle: &DatabaseHandle, delta: &DbDelta) -> Result<SchemaDef, CorpusError> {
    let schema = introspect(handle)?;
    let conn = handle.connection();
    match delta {
        DbDelta::RemoveColumn { column } => {
            let col = resolve(&schema, column)?;
            remove_column(conn, &schema, &col)?;
        }
        DbDelta::AddColumn {
            column,
            col_type,
            values,
        } => {
            let table = schema
                .table(&column.table)
                .ok_or_else(|| conflict(format!("table {} does not exist", column.table)))?;
            if table.column(&column.column).is_some() {
                return Err(conflict(format!("column {column} already exists")));
            }
            let rowids = rowids(conn, &table.name)?;
            if !values.is_empty() && values.len() != rowids.len() {
                return Err(conflict(format!(
                    "{} values supplied for {} rows of {}",
                    values.len(),
                    rowids.len(),
                    table.name
                )));
            }
            let tx = conn.unchecked_transaction()?;
            tx.execute_batch(&format!(
                "ALTER TABLE {} ADD COLUMN {} {}",
                quote(&table.name),
                quote(&column.column),
                col_type.declared()
            ))?;
            {
                let mut stmt = tx.prepare(&format!(
                    "UPDATE {} SET {} = ?1 WHERE rowid = ?2",
                    quote(&table.name),
                    quote(&column.column)
                ))?;
                for (value, rowid) in values.iter().zip(&rowids) {
                    stmt.execute(rusqlite::params![value, rowid])?;
                }
            }
            tx.commit()?;
        }
        DbDelta::ReplaceCellValues {
            column,
            old_value,
            new_values,
        } => {
            let col = resolve(&schema, column)?;
            if new_values.is_empty() {
                return Err(conflict("no replacement values"));
            }
            replace_values(conn, &schema, &col, old_value, new_values)?;
        }
        DbDelta::DeleteRowsByValue { column, value } => {
            let col = resolve(&schema, column)?;
            conn.execute(
                &format!("DELETE FROM {} WHERE {} = ?1", quote(&col.table), quote(&col.column)),
                [value],
            )?;
        }
        DbDelta::CreateTables { tables } => create_tables(conn, &schema, tables)?,
    }
    introspect(handle)
}

fn rowids(conn: &Connection, table: &str) -> Result<Vec<i64>, CorpusError> {
    let mut stmt = conn.prepare(&format!("SELECT rowid FROM {} ORDER BY rowid", quote(table)))?;
    let ids = stmt.query_map([], |r| r.get(0))?.collect::<Result<_, _>>()?;
    Ok(ids)
}

/// Values of `col` in storage order.
pub fn column_values(handle: &DatabaseHandle, col: &ColumnRef) -> Result<Vec<Cell>, CorpusError> {
    let mut stmt = handle.connection().prepare(&format!(
        "SELECT {} FROM {} ORDER BY rowid",
        quote(&col.column),
        quote(&col.table)
    ))?;
    let values = stmt
        .query_map([], |r| Ok(Cell::from_value_ref(r.get_ref(0)?)))?
        .collect::<Result<_, _>>()?;
    Ok(values)
}

struct ColumnInfo {
    name: String,
    decl: String,
    pk: i64,
}

fn table_info(conn: &Connection, table: &str) -> Result<Vec<ColumnInfo>, CorpusError> {
    let mut stmt = conn.prepare(&format!("PRAGMA table_info({})", quote(table)))?;
    let cols = stmt
        .query_map([], |r| {
            Ok(ColumnInfo {
                name: r.get(1)?,
                decl: r.get::<_, Option<String>>(2)?.unwrap_or_default(),
                pk: r.get(5)?,
            })
        })?
        .collect::<Result<_, _>>()?;
    Ok(cols)
}

fn remove_column(conn: &Connection, schema: &SchemaDef, col: &ColumnRef) -> Result<(), CorpusError> {
    let info = table_info(conn, &col.table)?;
    let keep: Vec<&ColumnInfo> = info
        .iter()
        .filter(|c| !c.name.eq_ignore_ascii_case(&col.column))
        .collect();
    if keep.is_empty() {
        return Err(conflict(format!("{col} is the only column of its table")));
    }
    let mut defs: Vec<String> = keep
        .iter()
        .map(|c| format!("{} {}", quote(&c.name), c.decl).trim_end().to_string())
        .collect();
    let mut pk: Vec<&&ColumnInfo> = keep.iter().filter(|c| c.pk > 0).collect();
    pk.sort_by_key(|c| c.pk);
    if !pk.is_empty() {
        let names: Vec<String> = pk.iter().map(|c| quote(&c.name)).collect();
        defs.push(format!("PRIMARY KEY ({})", names.join(", ")));
    }
    for fk in &schema.foreign_keys {
        if fk.from.table.eq_ignore_ascii_case(&col.table) && fk.from != *col {
            defs.push(format!(
                "FOREIGN KEY ({}) REFERENCES {}({})",
                quote(&fk.from.column),
                quote(&fk.to.table),
                quote(&fk.to.column)
            ));
        }
    }
    let names: Vec<String> = keep.iter().map(|c| quote(&c.name)).collect();
    let names = names.join(", ");
    let tmp = quote(&format!("__new_{}", col.table));
    let table = quote(&col.table);
    conn.execute_batch("PRAGMA foreign_keys = OFF")?;
    let tx = conn.unchecked_transaction()?;
    tx.execute_batch(&format!(
        "CREATE TABLE {tmp} ({defs});
         INSERT INTO {tmp} ({names}) SELECT {names} FROM {table} ORDER BY rowid;
         DROP TABLE {table};
         ALTER TABLE {tmp} RENAME TO {table};",
        defs = defs.join(", ")
    ))?;
    tx.commit()?;
    Ok(())
}

fn replace_values(
    conn: &Connection,
    schema: &SchemaDef,
    col: &ColumnRef,
    old: &Cell,
    new_values: &[Cell],
) -> Result<(), CorpusError> {
    let table = quote(&col.table);
    let column = quote(&col.column);
    let holders: Vec<i64> = {
        let mut stmt = conn.prepare(&format!("SELECT rowid FROM {table} WHERE {column} = ?1 ORDER BY rowid"))?;
        let ids = stmt.query_map([old], |r| r.get(0))?.collect::<Result<_, _>>()?;
        ids
    };
    if holders.is_empty() {
        return Err(conflict(format!("no row of {col} holds {old}")));
    }
    let tx = conn.unchecked_transaction()?;
    for (i, rowid) in holders.iter().enumerate() {
        tx.execute(
            &format!("UPDATE {table} SET {column} = ?1 WHERE rowid = ?2"),
            rusqlite::params![&new_values[i % new_values.len()], rowid],
        )?;
    }
    // fewer holders than values: clone the last holder with a fresh key for each missing value
    if holders.len() < new_values.len() {
        let info = table_info(&tx, &col.table)?;
        let template_id = *holders.last().expect("non-empty");
        let template: Vec<Cell> = {
            let names: Vec<String> = info.iter().map(|c| quote(&c.name)).collect();
            tx.query_row(
                &format!("SELECT {} FROM {table} WHERE rowid = ?1", names.join(", ")),
                [template_id],
                |r| (0..info.len()).map(|i| Ok(Cell::from_value_ref(r.get_ref(i)?))).collect(),
            )?
        };
        for value in &new_values[holders.len()..] {
            let mut row = template.clone();
            for (i, c) in info.iter().enumerate() {
                if c.name.eq_ignore_ascii_case(&col.column) {
                    row[i] = value.clone();
                } else if c.pk > 0 || schema.is_primary_key(&ColumnRef::new(col.table.clone(), c.name.clone())) {
                    row[i] = fresh_key(&tx, &col.table, &c.name, &row[i])?;
                }
            }
            let names: Vec<String> = info.iter().map(|c| quote(&c.name)).collect();
            let marks: Vec<String> = (1..=info.len()).map(|i| format!("?{i}")).collect();
            tx.execute(
                &format!("INSERT INTO {table} ({}) VALUES ({})", names.join(", "), marks.join(", ")),
                params_from_iter(row.iter()),
            )?;
        }
    }
    tx.commit()?;
    Ok(())
}

fn fresh_key(conn: &Connection, table: &str, column: &str, current: &Cell) -> Result<Cell, CorpusError> {
    let (t, c) = (quote(table), quote(column));
    match current {
        Cell::Text(s) => {
            let mut n = 1;
            loop {
                let candidate = if n == 1 {
                    format!("{s}_clone")
                } else {
                    format!("{s}_clone{n}")
                };
                let taken: i64 = conn.query_row(&format!("SELECT count(*) FROM {t} WHERE {c} = ?1"), [&candidate], |r| {
                    r.get(0)
                })?;
                if taken == 0 {
                    return Ok(Cell::Text(candidate));
                }
                n += 1;
            }
        }
        _ => {
            let max: Option<f64> = conn.query_row(&format!("SELECT max({c}) FROM {t}"), [], |r| r.get(0))?;
            Ok(Cell::Integer(max.unwrap_or(0.0).floor() as i64 + 1))
        }
    }
}

fn create_tables(conn: &Connection, schema: &SchemaDef, tables: &[NewTable]) -> Result<(), CorpusError> {
    for t in tables {
        if schema.table(&t.name).is_some() {
            return Err(conflict(format!("table {} already exists", t.name)));
        }
        if t.columns.is_empty() {
            return Err(conflict(format!("table {} has no columns", t.name)));
        }
        for fk in &t.foreign_keys {
            let internal = |r: &ColumnRef| {
                tables
                    .iter()
                    .any(|o| o.name.eq_ignore_ascii_case(&r.table) && o.columns.iter().any(|c| c.name.eq_ignore_ascii_case(&r.column)))
            };
            if !fk.from.table.eq_ignore_ascii_case(&t.name) || !internal(&fk.from) || !internal(&fk.to) {
                return Err(conflict(format!("foreign key {} -> {} leaves the new tables", fk.from, fk.to)));
            }
        }
        if let Some(row) = t.rows.iter().find(|r| r.len() != t.columns.len()) {
            return Err(conflict(format!("row of width {} in table {}", row.len(), t.name)));
        }
    }
    let tx = conn.unchecked_transaction()?;
    for t in tables {
        let mut defs: Vec<String> = t
            .columns
            .iter()
            .map(|c| format!("{} {}", quote(&c.name), c.col_type.declared()))
            .collect();
        if let Some(pk) = &t.primary_key {
            defs.push(format!("PRIMARY KEY ({})", quote(pk)));
        }
        for fk in &t.foreign_keys {
            defs.push(format!(
                "FOREIGN KEY ({}) REFERENCES {}({})",
                quote(&fk.from.column),
                quote(&fk.to.table),
                quote(&fk.to.column)
            ));
        }
        tx.execute_batch(&format!("CREATE TABLE {} ({})", quote(&t.name), defs.join(", ")))?;
        let marks: Vec<String> = (1..=t.columns.len()).map(|i| format!("?{i}")).collect();
        let mut stmt = tx.prepare(&format!("INSERT INTO {} VALUES ({})", quote(&t.name), marks.join(", ")))?;
        for row in &t.rows {
            stmt.execute(params_from_iter(row.iter()))?;
        }
    }
    tx.commit()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DbStore;

    const SCHOOL: &str = "CREATE TABLE stadium (Stadium_ID INTEGER PRIMARY KEY, Name TEXT, Capacity INT);
        INSERT INTO stadium VALUES (1, 'Hampden', 52500), (2, 'Balmoor', 4000), (3, 'Glebe', 3960);
        CREATE TABLE course (Course_ID INTEGER PRIMARY KEY, Course TEXT);
        INSERT INTO course VALUES (1, 'Math'), (2, 'Chemistry'), (3, 'Art');
        CREATE TABLE teach (Teacher TEXT PRIMARY KEY, Course_ID INT, FOREIGN KEY (Course_ID) REFERENCES course(Course_ID));
        INSERT INTO teach VALUES ('Anne', 2), ('Bob', 1);";

    fn handle() -> (tempfile::TempDir, DatabaseHandle) {
        let dir = tempfile::tempdir().unwrap();
        let db = dir.path().join("db").join("s");
        std::fs::create_dir_all(&db).unwrap();
        std::fs::write(db.join("schema.sql"), SCHOOL).unwrap();
        let h = DbStore::new(dir.path().join("db")).checkout("s", dir.path()).unwrap();
        (dir, h)
    }

    fn count(h: &DatabaseHandle, sql: &str) -> i64 {
        h.connection().query_row(sql, [], |r| r.get(0)).unwrap()
    }

    #[test]
    fn capacity_split() {
        let (_dir, h) = handle();
        let cap = ColumnRef::new("stadium", "Capacity");
        let values = column_values(&h, &cap).unwrap();
        apply_delta(&h, &DbDelta::RemoveColumn { column: cap }).unwrap();
        for name in ["Standing Capacity", "Seating Capacity"] {
            apply_delta(
                &h,
                &DbDelta::AddColumn {
                    column: ColumnRef::new("stadium", name),
                    col_type: ColType::Number,
                    values: values.clone(),
                },
            )
            .unwrap();
        }
        let s = introspect(&h).unwrap();
        let t = s.table("stadium").unwrap();
        assert!(t.column("Capacity").is_none());
        assert!(t.column("Standing Capacity").is_some() && t.column("Seating Capacity").is_some());
        assert_eq!(count(&h, "SELECT max(\"Seating Capacity\") FROM stadium"), 52500);
        assert!(s.is_primary_key(&ColumnRef::new("stadium", "Stadium_ID")));
        assert_eq!(count(&h, "SELECT count(*) FROM stadium"), 3);
    }

    #[test]
    fn chemistry_becomes_two_values() {
        let (_dir, h) = handle();
        let col = ColumnRef::new("course", "Course");
        apply_delta(
            &h,
            &DbDelta::ReplaceCellValues {
                column: col,
                old_value: "Chemistry".into(),
                new_values: vec!["Organic Chemistry".into(), "Physical Chemistry".into()],
            },
        )
        .unwrap();
        assert_eq!(count(&h, "SELECT count(*) FROM course WHERE Course = 'Chemistry'"), 0);
        assert_eq!(count(&h, "SELECT count(*) FROM course WHERE Course = 'Organic Chemistry'"), 1);
        assert_eq!(count(&h, "SELECT count(*) FROM course WHERE Course = 'Physical Chemistry'"), 1);
        assert_eq!(count(&h, "SELECT max(Course_ID) FROM course"), 4);
    }

    #[test]
    fn remove_missing_column_conflicts() {
        let (_dir, h) = handle();
        let err = apply_delta(
            &h,
            &DbDelta::RemoveColumn {
                column: ColumnRef::new("stadium", "Nope"),
            },
        );
        assert!(matches!(err, Err(CorpusError::DeltaConflict(_))));
    }

    #[test]
    fn remove_keeps_foreign_keys_of_other_columns() {
        let (_dir, h) = handle();
        let s = apply_delta(
            &h,
            &DbDelta::RemoveColumn {
                column: ColumnRef::new("teach", "Teacher"),
            },
        )
        .unwrap();
        assert_eq!(s.foreign_keys.len(), 1);
        assert_eq!(s, introspect(&h).unwrap());
    }

    #[test]
    fn add_column_row_count_mismatch() {
        let (_dir, h) = handle();
        let err = apply_delta(
            &h,
            &DbDelta::AddColumn {
                column: ColumnRef::new("stadium", "x"),
                col_type: ColType::Text,
                values: vec!["a".into()],
            },
        );
        assert!(matches!(err, Err(CorpusError::DeltaConflict(_))));
    }

    #[test]
    fn delete_rows_and_create_tables() {
        let (_dir, h) = handle();
        apply_delta(
            &h,
            &DbDelta::DeleteRowsByValue {
                column: ColumnRef::new("stadium", "Name"),
                value: "Glebe".into(),
            },
        )
        .unwrap();
        assert_eq!(count(&h, "SELECT count(*) FROM stadium WHERE Name = 'Glebe'"), 0);
        let before = introspect(&h).unwrap().fk_components();
        let text = |n: &str| ColumnDef {
            name: n.into(),
            col_type: ColType::Text,
        };
        let tables = vec![
            NewTable {
                name: "library".into(),
                columns: vec![text("library_id"), text("name")],
                primary_key: Some("library_id".into()),
                foreign_keys: vec![],
                rows: vec![vec!["L1".into(), "Main".into()]],
            },
            NewTable {
                name: "books".into(),
                columns: vec![text("book_id"), text("library_id"), text("title")],
                primary_key: Some("book_id".into()),
                foreign_keys: vec![ForeignKey {
                    from: ColumnRef::new("books", "library_id"),
                    to: ColumnRef::new("library", "library_id"),
                }],
                rows: vec![vec!["B1".into(), "L1".into(), "ABC".into()]],
            },
        ];
        let s = apply_delta(&h, &DbDelta::CreateTables { tables: tables.clone() }).unwrap();
        assert_eq!(s.fk_components(), before + 1);
        assert!(matches!(
            apply_delta(&h, &DbDelta::CreateTables { tables }),
            Err(CorpusError::DeltaConflict(_))
        ));
    }

    #[test]
    fn delta_json_round_trip() {
        let d = DbDelta::ReplaceCellValues {
            column: ColumnRef::new("t", "c"),
            old_value: Cell::Integer(5),
            new_values: vec![Cell::Real(5.5), Cell::Null],
        };
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<DbDelta>(&text).unwrap(), d);
    }
}
