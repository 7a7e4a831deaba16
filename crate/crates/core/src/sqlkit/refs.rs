use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::walk::{walk_query, Clause, Resolution};
use crate::corpus::{ColumnRef, SchemaDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Like,
    In,
}

impl Comparator {
    fn from_op(op: BinaryOp) -> Option<Comparator> {
        Some(match op {
            BinaryOp::Eq => Comparator::Eq,
            BinaryOp::NotEq => Comparator::NotEq,
            BinaryOp::Lt => Comparator::Lt,
            BinaryOp::LtEq => Comparator::LtEq,
            BinaryOp::Gt => Comparator::Gt,
            BinaryOp::GtEq => Comparator::GtEq,
            _ => return None,
        })
    }

    fn flipped(self) -> Comparator {
        match self {
            Comparator::Lt => Comparator::Gt,
            Comparator::LtEq => Comparator::GtEq,
            Comparator::Gt => Comparator::Lt,
            Comparator::GtEq => Comparator::LtEq,
            other => other,
        }
    }
}

/// `column <comparator> literal` found in a WHERE clause.
#[derive(Debug, Clone, PartialEq)]
pub struct WhereAtom {
    pub column: ColumnRef,
    pub comparator: Comparator,
    pub value: Literal,
    /// Subquery nesting level the atom was found at.
    pub depth: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SqlRefs {
    /// Base columns projected by the outermost query (every set-operation branch).
    pub select_columns: Vec<ColumnRef>,
    pub where_atoms: Vec<WhereAtom>,
    /// Table pairs linked by a join, each pair sorted.
    pub joined_tables: BTreeSet<(String, String)>,
    /// Every base column mentioned in any WHERE clause.
    pub where_columns: Vec<ColumnRef>,
    /// Every base column mentioned anywhere.
    pub columns: Vec<ColumnRef>,
    pub tables: BTreeSet<String>,
    /// Column names that resolve against no visible table.
    pub unresolved: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RefError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
}

fn push_unique(list: &mut Vec<ColumnRef>, col: ColumnRef) {
    if !list.contains(&col) {
        list.push(col);
    }
}

/// Splits `column op literal` (either orientation) into its parts.
pub(crate) fn column_literal(left: &Expr, right: &Expr) -> Option<(ColumnName, Literal, bool)> {
    match (strip(left), strip(right)) {
        (Expr::Column(c), r) => literal_of(r).map(|l| (c.clone(), l, false)),
        (l, Expr::Column(c)) => literal_of(l).map(|lit| (c.clone(), lit, true)),
        _ => None,
    }
}

fn strip(e: &Expr) -> &Expr {
    match e {
        Expr::Nested(inner) => strip(inner),
        other => other,
    }
}

pub(crate) fn literal_of(e: &Expr) -> Option<Literal> {
    match strip(e) {
        Expr::Literal(l) => Some(l.clone()),
        Expr::Unary {
            op: UnaryOp::Minus,
            expr,
        } => match strip(expr) {
            Expr::Literal(Literal::Number(n)) => Some(Literal::Number(format!("-{n}"))),
            _ => None,
        },
        _ => None,
    }
}

pub fn extract_refs(tree: &Query, schema: &SchemaDef) -> Result<SqlRefs, RefError> {
    let mut refs = SqlRefs::default();
    let mut unknown_qualifier = None;
    let mut aliases = BTreeSet::new();
    collect_aliases(tree, &mut aliases);
    let mut tree = tree.clone();
    let outcome = walk_query(&mut tree, schema, |e, ctx| {
        match e {
            Expr::Column(col) => match ctx.resolve(col) {
                Resolution::Column(c) => {
                    if ctx.clause == Clause::Projection && ctx.depth == 0 {
                        push_unique(&mut refs.select_columns, c.clone());
                    }
                    if ctx.clause == Clause::Where {
                        push_unique(&mut refs.where_columns, c.clone());
                    }
                    push_unique(&mut refs.columns, c);
                }
                Resolution::UnknownQualifier(q) => {
                    unknown_qualifier.get_or_insert(q);
                }
                Resolution::Unresolved => {
                    if !aliases.contains(&col.name.to_lowercase()) {
                        refs.unresolved.push(col.name.clone());
                    }
                }
                Resolution::Opaque => {}
            },
            Expr::Binary { op, left, right } if ctx.clause == Clause::JoinOn || ctx.clause == Clause::Where => {
                if *op == BinaryOp::Eq {
                    if let (Expr::Column(a), Expr::Column(b)) = (strip(left), strip(right)) {
                        if let (Resolution::Column(a), Resolution::Column(b)) = (ctx.resolve(a), ctx.resolve(b)) {
                            if !a.table.eq_ignore_ascii_case(&b.table) {
                                refs.joined_tables.insert(sorted_pair(&a.table, &b.table));
                            }
                        }
                    }
                }
                if ctx.clause == Clause::Where {
                    if let Some(cmp) = Comparator::from_op(*op) {
                        if let Some((col, lit, flipped)) = column_literal(left, right) {
                            if let Resolution::Column(c) = ctx.resolve(&col) {
                                let comparator = if flipped { cmp.flipped() } else { cmp };
                                refs.where_atoms.push(WhereAtom {
                                    column: c,
                                    comparator,
                                    value: lit,
                                    depth: ctx.depth,
                                });
                            }
                        }
                    }
                }
            }
            Expr::Like {
                expr,
                pattern,
                negated: false,
            } if ctx.clause == Clause::Where => {
                if let (Expr::Column(col), Some(lit)) = (strip(expr), literal_of(pattern)) {
                    if let Resolution::Column(c) = ctx.resolve(col) {
                        refs.where_atoms.push(WhereAtom {
                            column: c,
                            comparator: Comparator::Like,
                            value: lit,
                            depth: ctx.depth,
                        });
                    }
                }
            }
            Expr::InList {
                expr,
                list,
                negated: false,
            } if ctx.clause == Clause::Where => {
                if let Expr::Column(col) = strip(expr) {
                    if let Resolution::Column(c) = ctx.resolve(col) {
                        for item in list.iter() {
                            if let Some(lit) = literal_of(item) {
                                refs.where_atoms.push(WhereAtom {
                                    column: c.clone(),
                                    comparator: Comparator::In,
                                    value: lit,
                                    depth: ctx.depth,
                                });
                            }
                        }
                    }
                }
            }
            Expr::Between {
                expr,
                low,
                high,
                negated: false,
            } if ctx.clause == Clause::Where => {
                if let Expr::Column(col) = strip(expr) {
                    if let Resolution::Column(c) = ctx.resolve(col) {
                        for (cmp, bound) in [(Comparator::GtEq, low), (Comparator::LtEq, high)] {
                            if let Some(lit) = literal_of(bound) {
                                refs.where_atoms.push(WhereAtom {
                                    column: c.clone(),
                                    comparator: cmp,
                                    value: lit,
                                    depth: ctx.depth,
                                });
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        true
    });
    if let Some(t) = outcome.unknown_tables.into_iter().next() {
        return Err(RefError::UnknownTable(t));
    }
    if let Some(q) = unknown_qualifier {
        return Err(RefError::UnknownTable(q));
    }
    for scope in &outcome.scopes {
        let tables: Vec<&String> = scope.iter().filter_map(|b| b.table.as_ref()).collect();
        for t in &tables {
            refs.tables.insert((*t).clone());
        }
        // FROM lists without a linking equality still pair with the first table
        if let Some((first, rest)) = tables.split_first() {
            for t in rest {
                let linked = refs
                    .joined_tables
                    .iter()
                    .any(|(a, b)| a.eq_ignore_ascii_case(t) || b.eq_ignore_ascii_case(t));
                if !linked && !first.eq_ignore_ascii_case(t) {
                    refs.joined_tables.insert(sorted_pair(first, t));
                }
            }
        }
    }
    Ok(refs)
}

fn sorted_pair(a: &str, b: &str) -> (String, String) {
    if a.to_lowercase() <= b.to_lowercase() {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn collect_aliases(q: &Query, out: &mut BTreeSet<String>) {
    for s in q.selects() {
        for item in &s.projection {
            if let Some(a) = &item.alias {
                out.insert(a.to_lowercase());
            }
        }
        if let Some(from) = &s.from {
            for f in from.factors() {
                if let TableFactor::Derived { query, .. } = f {
                    collect_aliases(query, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ColType, ColumnDef, TableDef};
    use crate::sqlkit::parse;

    fn table(name: &str, cols: &[&str]) -> TableDef {
        TableDef {
            name: name.into(),
            columns: cols
                .iter()
                .map(|c| ColumnDef {
                    name: c.to_string(),
                    col_type: ColType::Text,
                })
                .collect(),
        }
    }

    fn schema() -> SchemaDef {
        SchemaDef {
            db_id: "car_1".into(),
            tables: vec![
                table("car_makers", &["Id", "Maker", "FullName", "Country"]),
                table("model_list", &["ModelId", "Maker", "Model"]),
                table("stadium", &["Stadium_ID", "Name", "Capacity"]),
            ],
            primary_keys: vec![],
            foreign_keys: vec![],
        }
    }

    fn refs(sql: &str) -> SqlRefs {
        extract_refs(&parse(sql).unwrap(), &schema()).unwrap()
    }

    #[test]
    fn equality_atom_with_alias() {
        let r = refs(
            "SELECT count(*) FROM car_makers AS T1 JOIN model_list AS T2 ON T1.Id = T2.Maker \
             WHERE T1.FullName = 'American Motor Company'",
        );
        assert_eq!(r.where_atoms.len(), 1);
        let atom = &r.where_atoms[0];
        assert_eq!(atom.column, ColumnRef::new("car_makers", "FullName"));
        assert_eq!(atom.comparator, Comparator::Eq);
        assert_eq!(atom.value, Literal::String("American Motor Company".into()));
        assert_eq!(
            r.joined_tables.into_iter().collect::<Vec<_>>(),
            vec![("car_makers".to_string(), "model_list".to_string())]
        );
    }

    #[test]
    fn star_is_not_a_select_column() {
        assert!(refs("SELECT * FROM stadium").select_columns.is_empty());
    }

    #[test]
    fn aggregate_argument_is_projected() {
        let r = refs("SELECT max(capacity) FROM stadium");
        assert_eq!(r.select_columns, vec![ColumnRef::new("stadium", "Capacity")]);
        assert!(r.where_atoms.is_empty());
    }

    #[test]
    fn reversed_comparison_flips() {
        let r = refs("SELECT name FROM stadium WHERE 1000 < capacity");
        assert_eq!(r.where_atoms[0].comparator, Comparator::Gt);
    }

    #[test]
    fn in_list_and_between_atoms() {
        let r = refs("SELECT name FROM stadium WHERE name IN ('a', 'b') AND capacity BETWEEN 1 AND 5");
        let cmps: Vec<_> = r.where_atoms.iter().map(|a| a.comparator).collect();
        assert_eq!(cmps, vec![Comparator::In, Comparator::In, Comparator::GtEq, Comparator::LtEq]);
    }

    #[test]
    fn unknown_table_and_alias() {
        let s = schema();
        assert_eq!(
            extract_refs(&parse("SELECT a FROM nope").unwrap(), &s),
            Err(RefError::UnknownTable("nope".into()))
        );
        assert_eq!(
            extract_refs(&parse("SELECT T9.name FROM stadium AS T1").unwrap(), &s),
            Err(RefError::UnknownTable("T9".into()))
        );
    }

    #[test]
    fn comma_join_pairs_with_first_table() {
        let r = refs("SELECT T1.name FROM stadium AS T1, car_makers AS T2");
        assert_eq!(r.joined_tables.len(), 1);
    }
}
