use super::ast::*;
use super::refs::{column_literal, literal_of};
use super::walk::{walk_query, Ctx, Resolution};
use crate::corpus::{ColumnRef, SchemaDef};

#[derive(Debug, Clone, PartialEq)]
pub enum RewriteSpec {
    SubstituteColumn {
        old: ColumnRef,
        new: ColumnRef,
    },
    /// Replaces literals equal to `old`; restricted to comparisons on `column` when given.
    SubstituteLiteral {
        old: Literal,
        new: Literal,
        column: Option<ColumnRef>,
    },
    AddProjection(Vec<ColumnRef>),
    WidenPredicate {
        old: ColumnRef,
        candidates: Vec<ColumnRef>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("reference `{0}` not found in query")]
    RefNotFound(String),
}

/// Applies `spec` to a copy of `tree`. Column references are resolved against `schema`,
/// which must contain the columns named by the spec's old side.
pub fn rewrite(tree: &Query, schema: &SchemaDef, spec: &RewriteSpec) -> Result<Query, RewriteError> {
    let mut out = tree.clone();
    match spec {
        RewriteSpec::SubstituteColumn { old, new } => {
            let mut hits = 0;
            walk_query(&mut out, schema, |e, ctx| {
                if let Expr::Column(col) = e {
                    if matches!(ctx.resolve(col), Resolution::Column(c) if &c == old) {
                        hits += 1;
                        if new != old {
                            *col = retarget(col, old, new);
                        }
                    }
                }
                true
            });
            if hits == 0 {
                return Err(RewriteError::RefNotFound(old.to_string()));
            }
        }
        RewriteSpec::SubstituteLiteral { old, new, column } => {
            let mut hits = 0;
            walk_query(&mut out, schema, |e, ctx| {
                hits += replace_literals(e, ctx, old, new, column.as_ref());
                true
            });
            if hits == 0 {
                return Err(RewriteError::RefNotFound(old.to_string()));
            }
        }
        RewriteSpec::AddProjection(cols) => {
            for select in out.selects_mut() {
                for col in cols {
                    let expr = projection_for(select, col)
                        .ok_or_else(|| RewriteError::RefNotFound(col.to_string()))?;
                    select.projection.push(SelectItem { expr, alias: None });
                }
            }
        }
        RewriteSpec::WidenPredicate { old, candidates } => {
            let mut hits = 0;
            walk_query(&mut out, schema, |e, ctx| {
                if let Some(col) = atom_column(e) {
                    if matches!(ctx.resolve(&col), Resolution::Column(c) if &c == old) {
                        hits += 1;
                        *e = widen(e, &col, old, candidates);
                        return false;
                    }
                }
                true
            });
            if hits == 0 {
                return Err(RewriteError::RefNotFound(old.to_string()));
            }
        }
    }
    Ok(out)
}

fn retarget(col: &ColumnName, old: &ColumnRef, new: &ColumnRef) -> ColumnName {
    let qualifier = match &col.qualifier {
        Some(q) if new.table.eq_ignore_ascii_case(&old.table) => Some(q.clone()),
        Some(_) => Some(new.table.clone()),
        None => None,
    };
    ColumnName {
        qualifier,
        name: new.column.clone(),
    }
}

fn replace_literals(
    e: &mut Expr,
    ctx: &Ctx<'_>,
    old: &Literal,
    new: &Literal,
    column: Option<&ColumnRef>,
) -> usize {
    let col_ok = |c: &ColumnName| match column {
        None => true,
        Some(want) => matches!(ctx.resolve(c), Resolution::Column(r) if &r == want),
    };
    let swap = |slot: &mut Expr| -> usize {
        match literal_of(slot) {
            Some(l) if l.matches(old) => {
                *slot = Expr::Literal(new.clone());
                1
            }
            _ => 0,
        }
    };
    match e {
        Expr::Binary { op, left, right } if op.is_comparison() => match column_literal(left, right) {
            Some((c, _, flipped)) if col_ok(&c) => {
                if flipped {
                    swap(left)
                } else {
                    swap(right)
                }
            }
            _ => 0,
        },
        Expr::Like { expr, pattern, .. } => match expr.as_ref() {
            Expr::Column(c) if col_ok(c) => swap(pattern),
            _ => 0,
        },
        Expr::InList { expr, list, .. } => match expr.as_ref() {
            Expr::Column(c) if col_ok(c) => list.iter_mut().map(swap).sum(),
            _ => 0,
        },
        Expr::Between { expr, low, high, .. } => match expr.as_ref() {
            Expr::Column(c) if col_ok(c) => swap(low) + swap(high),
            _ => 0,
        },
        _ => 0,
    }
}

/// The column of a `column op literal` style predicate.
fn atom_column(e: &Expr) -> Option<ColumnName> {
    match e {
        Expr::Binary { op, left, right } if op.is_comparison() => {
            column_literal(left, right).map(|(c, _, _)| c)
        }
        Expr::Like { expr, pattern, .. } => match (expr.as_ref(), literal_of(pattern)) {
            (Expr::Column(c), Some(_)) => Some(c.clone()),
            _ => None,
        },
        Expr::InList { expr, .. } | Expr::Between { expr, .. } => match expr.as_ref() {
            Expr::Column(c) => Some(c.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn widen(atom: &Expr, col: &ColumnName, old: &ColumnRef, candidates: &[ColumnRef]) -> Expr {
    let variants: Vec<Expr> = candidates
        .iter()
        .map(|cand| {
            let mut v = atom.clone();
            replace_column(&mut v, col, &retarget(col, old, cand));
            v
        })
        .collect();
    let mut iter = variants.into_iter();
    let first = iter.next().unwrap_or_else(|| atom.clone());
    let mut any_more = false;
    let disjunction = iter.fold(first, |acc, v| {
        any_more = true;
        Expr::binary(BinaryOp::Or, acc, v)
    });
    if any_more {
        Expr::Nested(Box::new(disjunction))
    } else {
        disjunction
    }
}

fn replace_column(e: &mut Expr, from: &ColumnName, to: &ColumnName) {
    match e {
        Expr::Column(c) if c == from => *c = to.clone(),
        Expr::Nested(inner) => replace_column(inner, from, to),
        Expr::Binary { left, right, .. } => {
            replace_column(left, from, to);
            replace_column(right, from, to);
        }
        Expr::Like { expr, .. }
        | Expr::InList { expr, .. }
        | Expr::Between { expr, .. } => replace_column(expr, from, to),
        _ => {}
    }
}

fn projection_for(select: &Select, col: &ColumnRef) -> Option<Expr> {
    let from = select.from.as_ref()?;
    let factors: Vec<&TableFactor> = from.factors().collect();
    let factor = factors.iter().find(|f| {
        matches!(f, TableFactor::Table { name, .. } if name.eq_ignore_ascii_case(&col.table))
    })?;
    let qualifier = if factors.len() > 1 {
        match factor {
            TableFactor::Table { name, alias } => Some(alias.as_deref().unwrap_or(name)),
            TableFactor::Derived { .. } => None,
        }
    } else {
        None
    };
    Some(Expr::column(qualifier, &col.column))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ColType, ColumnDef, TableDef};
    use crate::sqlkit::{parse, render};

    fn schema() -> SchemaDef {
        let cols = |names: &[&str]| {
            names
                .iter()
                .map(|c| ColumnDef {
                    name: c.to_string(),
                    col_type: ColType::Text,
                })
                .collect()
        };
        SchemaDef {
            db_id: "x".into(),
            tables: vec![
                TableDef {
                    name: "stadium".into(),
                    columns: cols(&["Stadium_ID", "Name", "Capacity", "Seating Capacity", "Standing Capacity"]),
                },
                TableDef {
                    name: "ship".into(),
                    columns: cols(&["id", "name", "lost_in_battle", "location", "Port_of_Origin", "Destination"]),
                },
            ],
            primary_keys: vec![],
            foreign_keys: vec![],
        }
    }

    fn apply(sql: &str, spec: RewriteSpec) -> String {
        render(&rewrite(&parse(sql).unwrap(), &schema(), &spec).unwrap())
    }

    #[test]
    fn substitute_capacity() {
        let out = apply(
            "SELECT max(capacity), avg(capacity) FROM stadium",
            RewriteSpec::SubstituteColumn {
                old: ColumnRef::new("stadium", "Capacity"),
                new: ColumnRef::new("stadium", "Seating Capacity"),
            },
        );
        assert_eq!(out, "SELECT max(`Seating Capacity`), avg(`Seating Capacity`) FROM stadium");
    }

    #[test]
    fn identity_substitution_keeps_tree() {
        let tree = parse("SELECT max(capacity) FROM stadium").unwrap();
        let col = ColumnRef::new("stadium", "Capacity");
        let out = rewrite(
            &tree,
            &schema(),
            &RewriteSpec::SubstituteColumn {
                old: col.clone(),
                new: col,
            },
        )
        .unwrap();
        assert_eq!(out, tree);
    }

    #[test]
    fn widen_english_channel() {
        let out = apply(
            "SELECT name FROM ship WHERE Port_of_Origin = 'English Channel' AND id > 1",
            RewriteSpec::WidenPredicate {
                old: ColumnRef::new("ship", "Port_of_Origin"),
                candidates: vec![
                    ColumnRef::new("ship", "Port_of_Origin"),
                    ColumnRef::new("ship", "Destination"),
                ],
            },
        );
        assert_eq!(
            out,
            "SELECT name FROM ship WHERE (Port_of_Origin = 'English Channel' OR Destination = 'English Channel') AND id > 1"
        );
    }

    #[test]
    fn literal_substitution_by_value() {
        let out = apply(
            "SELECT name FROM stadium WHERE capacity = 5.0",
            RewriteSpec::SubstituteLiteral {
                old: Literal::Number("5".into()),
                new: Literal::Number("7".into()),
                column: None,
            },
        );
        assert_eq!(out, "SELECT name FROM stadium WHERE capacity = 7");
    }

    #[test]
    fn add_projection_uses_alias_in_joins() {
        let out = apply(
            "SELECT T1.name FROM ship AS T1 JOIN stadium AS T2 ON T1.id = T2.Stadium_ID",
            RewriteSpec::AddProjection(vec![ColumnRef::new("ship", "Destination")]),
        );
        assert!(out.starts_with("SELECT T1.name, T1.Destination FROM"), "{out}");
    }

    #[test]
    fn missing_ref_is_an_error() {
        let tree = parse("SELECT name FROM ship").unwrap();
        let err = rewrite(
            &tree,
            &schema(),
            &RewriteSpec::SubstituteColumn {
                old: ColumnRef::new("ship", "location"),
                new: ColumnRef::new("ship", "Destination"),
            },
        );
        assert!(matches!(err, Err(RewriteError::RefNotFound(_))));
    }
}
