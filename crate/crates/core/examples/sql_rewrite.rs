//! Parse a gold query, list what it touches, and swap one column for another.

use std::path::PathBuf;

use practiq::corpus::{introspect, ColumnRef, DbStore};
use practiq::sqlkit::{execute, extract_refs, parse, render, rewrite, RewriteSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let work = tempfile::tempdir()?;
    let db = DbStore::new(corpus.join("database")).checkout("concert_singer", work.path())?;
    let schema = introspect(&db)?;

    let sql = "SELECT T2.name , count(*) FROM concert AS T1 JOIN stadium AS T2 ON T1.stadium_id = T2.stadium_id GROUP BY T1.stadium_id";
    let tree = parse(sql)?;
    println!("canonical: {}", render(&tree));

    let refs = extract_refs(&tree, &schema)?;
    println!("tables:    {:?}", refs.tables);
    println!("projected: {:?}", refs.select_columns);
    println!("joins:     {:?}", refs.joined_tables);

    let swapped = rewrite(
        &tree,
        &schema,
        &RewriteSpec::SubstituteColumn {
            old: ColumnRef::new("stadium", "Name"),
            new: ColumnRef::new("stadium", "Location"),
        },
    )?;
    let text = render(&swapped);
    println!("rewritten: {text}");
    for row in execute(&db, &text)?.rows.iter().take(3) {
        println!("  {row:?}");
    }
    Ok(())
}
