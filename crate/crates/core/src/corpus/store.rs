use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rusqlite::Connection;

use super::{apply_delta, ColType, DbDelta, ColumnDef, ColumnRef, CorpusError, ForeignKey, SchemaDef, TableDef};

/// Directory of source databases laid out as `<db_id>/<db_id>.sqlite`.
#[derive(Debug, Clone)]
pub struct DbStore {
    root: PathBuf,
}

impl DbStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DbStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn source_path(&self, db_id: &str) -> PathBuf {
        self.root.join(db_id).join(format!("{db_id}.sqlite"))
    }

    fn schema_script(&self, db_id: &str) -> PathBuf {
        self.root.join(db_id).join("schema.sql")
    }

    pub fn contains(&self, db_id: &str) -> bool {
        self.source_path(db_id).is_file() || self.schema_script(db_id).is_file()
    }

    /// Isolated working copy of `db_id` inside `workdir`. The source is never opened for writing.
    pub fn checkout(&self, db_id: &str, workdir: &Path) -> Result<DatabaseHandle, CorpusError> {
        static NEXT: AtomicU64 = AtomicU64::new(0);
        std::fs::create_dir_all(workdir).map_err(|e| CorpusError::io(workdir, e))?;
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let path = workdir.join(format!("{db_id}-{}-{n}.sqlite", std::process::id()));
        let source = self.source_path(db_id);
        if source.is_file() {
            std::fs::copy(&source, &path).map_err(|e| CorpusError::io(&source, e))?;
            let conn = open_unchecked(&path)?;
            return Ok(DatabaseHandle::new(db_id, path, conn));
        }
        let script = self.schema_script(db_id);
        if script.is_file() {
            let sql = std::fs::read_to_string(&script).map_err(|e| CorpusError::io(&script, e))?;
            let conn = open_unchecked(&path)?;
            let handle = DatabaseHandle::new(db_id, path, conn);
            handle.connection().execute_batch(&sql)?;
            return Ok(handle);
        }
        Err(CorpusError::MissingDatabase(db_id.to_string()))
    }

    /// Working copy with `deltas` replayed in order.
    pub fn checkout_with(&self, db_id: &str, deltas: &[DbDelta], workdir: &Path) -> Result<DatabaseHandle, CorpusError> {
        let handle = self.checkout(db_id, workdir)?;
        for d in deltas {
            apply_delta(&handle, d)?;
        }
        Ok(handle)
    }
}

/// Working copies do not enforce foreign keys; corpus databases are not
/// guaranteed to satisfy their own declarations.
fn open_unchecked(path: &Path) -> Result<Connection, CorpusError> {
    let conn = Connection::open(path)?;
    conn.pragma_update(None, "foreign_keys", false)?;
    Ok(conn)
}

pub fn checkout_database(db_dir: &Path, db_id: &str, workdir: &Path) -> Result<DatabaseHandle, CorpusError> {
    DbStore::new(db_dir).checkout(db_id, workdir)
}

/// Single-owner working copy; the file is removed when the handle drops.
#[derive(Debug)]
pub struct DatabaseHandle {
    db_id: String,
    path: PathBuf,
    conn: Option<Connection>,
}

impl DatabaseHandle {
    fn new(db_id: &str, path: PathBuf, conn: Connection) -> Self {
        DatabaseHandle {
            db_id: db_id.to_string(),
            path,
            conn: Some(conn),
        }
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn connection(&self) -> &Connection {
        self.conn.as_ref().expect("connection lives until drop")
    }
}

impl Drop for DatabaseHandle {
    fn drop(&mut self) {
        drop(self.conn.take());
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Reads the current schema of a working copy.
pub fn introspect(handle: &DatabaseHandle) -> Result<SchemaDef, CorpusError> {
    let conn = handle.connection();
    let names: Vec<String> = {
        let mut stmt = conn.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
        )?;
        let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
        rows.collect::<Result<_, _>>()?
    };
    let mut tables = Vec::new();
    let mut primary_keys = Vec::new();
    let mut raw_fks = Vec::new();
    for name in &names {
        let mut stmt = conn.prepare(&format!("PRAGMA table_info({})", quote(name)))?;
        let cols: Vec<(String, String, i64)> = stmt
            .query_map([], |r| Ok((r.get(1)?, r.get::<_, Option<String>>(2)?.unwrap_or_default(), r.get(5)?)))?
            .collect::<Result<_, _>>()?;
        let mut pk: Vec<(i64, String)> = Vec::new();
        let mut columns = Vec::new();
        for (col, decl, pk_pos) in cols {
            if pk_pos > 0 {
                pk.push((pk_pos, col.clone()));
            }
            columns.push(ColumnDef {
                name: col,
                col_type: ColType::from_declared(&decl),
            });
        }
        pk.sort();
        primary_keys.extend(pk.into_iter().map(|(_, c)| ColumnRef::new(name.clone(), c)));
        let mut stmt = conn.prepare(&format!("PRAGMA foreign_key_list({})", quote(name)))?;
        let fks: Vec<(String, String, Option<String>)> = stmt
            .query_map([], |r| Ok((r.get(2)?, r.get(3)?, r.get(4)?)))?
            .collect::<Result<_, _>>()?;
        for (to_table, from, to) in fks {
            raw_fks.push((name.clone(), from, to_table, to));
        }
        tables.push(TableDef {
            name: name.clone(),
            columns,
        });
    }
    let mut schema = SchemaDef {
        db_id: handle.db_id().to_string(),
        tables,
        primary_keys,
        foreign_keys: Vec::new(),
    };
    for (from_table, from, to_table, to) in raw_fks {
        let to_col = match to {
            Some(c) => Some(c),
            None => schema
                .primary_keys
                .iter()
                .find(|k| k.table.eq_ignore_ascii_case(&to_table))
                .map(|k| k.column.clone()),
        };
        let Some(to_col) = to_col else { continue };
        // dangling references (e.g. to a removed column) are not part of the schema
        let (Some(from), Some(to)) = (
            schema.canonical(&ColumnRef::new(from_table, from)),
            schema.canonical(&ColumnRef::new(to_table, to_col)),
        ) else {
            continue;
        };
        let fk = ForeignKey { from, to };
        if !schema.foreign_keys.contains(&fk) {
            schema.foreign_keys.push(fk);
        }
    }
    Ok(schema)
}

pub(crate) fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(sql: &str) -> (tempfile::TempDir, DbStore) {
        let dir = tempfile::tempdir().unwrap();
        let db = dir.path().join("db").join("shop");
        std::fs::create_dir_all(&db).unwrap();
        let conn = Connection::open(db.join("shop.sqlite")).unwrap();
        conn.execute_batch(sql).unwrap();
        (dir, DbStore::new(dir_path(&db)))
    }

    fn dir_path(db: &Path) -> PathBuf {
        db.parent().unwrap().to_path_buf()
    }

    const SHOP: &str = "CREATE TABLE shop (id INTEGER PRIMARY KEY, name TEXT, score REAL);
        CREATE TABLE stock (shop_id INTEGER, qty INT, FOREIGN KEY (shop_id) REFERENCES shop(id));
        INSERT INTO shop VALUES (1, 'a', 1.5), (2, 'b', 2.0);";

    #[test]
    fn checkout_is_isolated() {
        let (dir, store) = store_with(SHOP);
        let source = store.source_path("shop");
        let before = std::fs::read(&source).unwrap();
        let work = dir.path().join("work");
        let a = store.checkout("shop", &work).unwrap();
        let b = store.checkout("shop", &work).unwrap();
        assert_ne!(a.path(), b.path());
        a.connection().execute("DELETE FROM shop", []).unwrap();
        let n: i64 = b.connection().query_row("SELECT count(*) FROM shop", [], |r| r.get(0)).unwrap();
        assert_eq!(n, 2);
        let path = a.path().to_path_buf();
        drop(a);
        assert!(!path.exists());
        assert_eq!(std::fs::read(&source).unwrap(), before);
    }

    #[test]
    fn unknown_db_is_missing() {
        let (dir, store) = store_with(SHOP);
        assert!(matches!(
            store.checkout("nope", dir.path()),
            Err(CorpusError::MissingDatabase(_))
        ));
    }

    #[test]
    fn introspection_reads_keys_and_types() {
        let (dir, store) = store_with(SHOP);
        let h = store.checkout("shop", dir.path()).unwrap();
        let s = introspect(&h).unwrap();
        assert_eq!(s.tables.len(), 2);
        assert_eq!(s.primary_keys, vec![ColumnRef::new("shop", "id")]);
        assert_eq!(s.foreign_keys[0].to, ColumnRef::new("shop", "id"));
        assert_eq!(s.column_type(&ColumnRef::new("shop", "score")), Some(ColType::Number));
        assert_eq!(s.column_type(&ColumnRef::new("shop", "name")), Some(ColType::Text));
    }
}
