//! Canonical SQL text for a [`Query`]. Keywords are upper-case, strings are
//! single-quoted, identifiers are back-quoted only when they need it.

use super::ast::*;
use super::parser::is_reserved;

pub fn render(query: &Query) -> String {
    let mut out = String::new();
    write_query(&mut out, query);
    out
}

pub fn render_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

pub fn quote_ident(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple && !is_reserved(name) {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn write_query(out: &mut String, query: &Query) {
    write_set_expr(out, &query.body);
    if !query.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, item) in query.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, &item.expr, 0);
            match item.descending {
                Some(true) => out.push_str(" DESC"),
                Some(false) => out.push_str(" ASC"),
                None => {}
            }
        }
    }
    if let Some(limit) = &query.limit {
        out.push_str(" LIMIT ");
        write_expr(out, &limit.count, 0);
        if let Some(offset) = &limit.offset {
            out.push_str(" OFFSET ");
            write_expr(out, offset, 0);
        }
    }
}

fn write_set_expr(out: &mut String, body: &SetExpr) {
    match body {
        SetExpr::Select(select) => write_select(out, select),
        SetExpr::SetOp {
            op,
            all,
            left,
            right,
        } => {
            write_set_expr(out, left);
            out.push(' ');
            out.push_str(op.keyword());
            if *all {
                out.push_str(" ALL");
            }
            out.push(' ');
            write_set_expr(out, right);
        }
    }
}

fn write_select(out: &mut String, select: &Select) {
    out.push_str("SELECT ");
    if select.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in select.projection.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, &item.expr, 0);
        if let Some(alias) = &item.alias {
            out.push_str(" AS ");
            out.push_str(&quote_ident(alias));
        }
    }
    if let Some(from) = &select.from {
        out.push_str(" FROM ");
        write_factor(out, &from.first);
        for join in &from.joins {
            match join.kind {
                JoinKind::Comma => out.push_str(", "),
                JoinKind::Inner => out.push_str(" JOIN "),
                JoinKind::Left => out.push_str(" LEFT JOIN "),
                JoinKind::Cross => out.push_str(" CROSS JOIN "),
                JoinKind::Natural => out.push_str(" NATURAL JOIN "),
            }
            write_factor(out, &join.factor);
            if let Some(on) = &join.constraint {
                out.push_str(" ON ");
                write_expr(out, on, 0);
            }
        }
    }
    if let Some(selection) = &select.selection {
        out.push_str(" WHERE ");
        write_expr(out, selection, 0);
    }
    if !select.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        write_list(out, &select.group_by);
    }
    if let Some(having) = &select.having {
        out.push_str(" HAVING ");
        write_expr(out, having, 0);
    }
}

fn write_factor(out: &mut String, factor: &TableFactor) {
    match factor {
        TableFactor::Table { name, alias } => {
            out.push_str(&quote_ident(name));
            if let Some(alias) = alias {
                out.push_str(" AS ");
                out.push_str(&quote_ident(alias));
            }
        }
        TableFactor::Derived { query, alias } => {
            out.push('(');
            write_query(out, query);
            out.push(')');
            if let Some(alias) = alias {
                out.push_str(" AS ");
                out.push_str(&quote_ident(alias));
            }
        }
    }
}

fn write_list(out: &mut String, exprs: &[Expr]) {
    for (i, e) in exprs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, e, 0);
    }
}

const PREC_NOT: u8 = 3;
const PREC_PREDICATE: u8 = 4;
const PREC_UNARY: u8 = 9;
const PREC_ATOM: u8 = 10;

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Like { .. } | Expr::InList { .. } | Expr::InSubquery { .. } => PREC_PREDICATE,
        Expr::Between { .. } | Expr::IsNull { .. } => PREC_PREDICATE,
        Expr::Unary { op: UnaryOp::Not, .. } => PREC_NOT,
        Expr::Unary { .. } => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

/// Writes `expr`, parenthesising it when it binds looser than `min_prec`.
fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    if precedence(expr) < min_prec {
        out.push('(');
        write_bare(out, expr);
        out.push(')');
    } else {
        write_bare(out, expr);
    }
}

fn write_bare(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Column(col) => {
            if let Some(q) = &col.qualifier {
                out.push_str(&quote_ident(q));
                out.push('.');
            }
            out.push_str(&quote_ident(&col.name));
        }
        Expr::Wildcard(None) => out.push('*'),
        Expr::Wildcard(Some(q)) => {
            out.push_str(&quote_ident(q));
            out.push_str(".*");
        }
        Expr::Literal(lit) => out.push_str(&lit.to_string()),
        Expr::Unary { op, expr } => {
            let p = precedence(expr.as_ref());
            match op {
                UnaryOp::Not => {
                    out.push_str("NOT ");
                    write_expr(out, expr, PREC_NOT);
                }
                UnaryOp::Minus | UnaryOp::Plus => {
                    out.push(if *op == UnaryOp::Minus { '-' } else { '+' });
                    if matches!(**expr, Expr::Unary { .. }) {
                        // `- -x`, never `--x` (a comment)
                        out.push(' ');
                        write_bare(out, expr);
                    } else if p < PREC_UNARY {
                        out.push('(');
                        write_bare(out, expr);
                        out.push(')');
                    } else {
                        write_bare(out, expr);
                    }
                }
            }
        }
        Expr::Binary { op, left, right } => {
            let p = op.precedence();
            write_expr(out, left, p);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, right, p + 1);
        }
        Expr::Like {
            expr,
            pattern,
            negated,
        } => {
            write_expr(out, expr, PREC_PREDICATE);
            out.push_str(if *negated { " NOT LIKE " } else { " LIKE " });
            write_expr(out, pattern, PREC_PREDICATE + 1);
        }
        Expr::InList {
            expr,
            list,
            negated,
        } => {
            write_expr(out, expr, PREC_PREDICATE);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            write_list(out, list);
            out.push(')');
        }
        Expr::InSubquery {
            expr,
            query,
            negated,
        } => {
            write_expr(out, expr, PREC_PREDICATE);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            write_query(out, query);
            out.push(')');
        }
        Expr::Between {
            expr,
            low,
            high,
            negated,
        } => {
            write_expr(out, expr, PREC_PREDICATE);
            out.push_str(if *negated { " NOT BETWEEN " } else { " BETWEEN " });
            write_expr(out, low, PREC_PREDICATE + 1);
            out.push_str(" AND ");
            write_expr(out, high, PREC_PREDICATE + 1);
        }
        Expr::IsNull { expr, negated } => {
            write_expr(out, expr, PREC_PREDICATE);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::Function {
            name,
            distinct,
            args,
        } => {
            out.push_str(name);
            out.push('(');
            if *distinct {
                out.push_str("DISTINCT ");
            }
            write_list(out, args);
            out.push(')');
        }
        Expr::Cast { expr, type_name } => {
            out.push_str("CAST(");
            write_expr(out, expr, 0);
            out.push_str(" AS ");
            out.push_str(type_name);
            out.push(')');
        }
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            out.push_str("CASE");
            if let Some(op) = operand {
                out.push(' ');
                write_expr(out, op, 0);
            }
            for (cond, result) in branches {
                out.push_str(" WHEN ");
                write_expr(out, cond, 0);
                out.push_str(" THEN ");
                write_expr(out, result, 0);
            }
            if let Some(e) = else_result {
                out.push_str(" ELSE ");
                write_expr(out, e, 0);
            }
            out.push_str(" END");
        }
        Expr::Exists(query) => {
            out.push_str("EXISTS (");
            write_query(out, query);
            out.push(')');
        }
        Expr::Subquery(query) => {
            out.push('(');
            write_query(out, query);
            out.push(')');
        }
        Expr::Nested(inner) => {
            out.push('(');
            write_expr(out, inner, 0);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqlkit::parse;

    fn roundtrip(sql: &str) -> String {
        let tree = parse(sql).unwrap();
        let text = render(&tree);
        assert_eq!(parse(&text).unwrap(), tree, "{sql} -> {text}");
        text
    }

    #[test]
    fn simple_projection() {
        assert_eq!(roundtrip("select a from t"), "SELECT a FROM t");
    }

    #[test]
    fn except_shape_survives() {
        let text = roundtrip(
            "SELECT name , result , bulgarian_commander FROM battle EXCEPT SELECT T1.name , T1.result , \
             T1.bulgarian_commander FROM battle AS T1 JOIN ship AS T2 ON T1.id = T2.lost_in_battle \
             WHERE T2.location = 'English Channel'",
        );
        assert!(text.contains(" EXCEPT SELECT "));
    }

    #[test]
    fn double_quoted_strings_become_single_quoted() {
        assert_eq!(
            roundtrip(r#"SELECT sum(SurfaceArea) FROM country WHERE Region = "Caribbean""#),
            "SELECT sum(SurfaceArea) FROM country WHERE Region = 'Caribbean'"
        );
    }

    #[test]
    fn identifiers_with_spaces_are_quoted() {
        assert_eq!(quote_ident("Seating Capacity"), "`Seating Capacity`");
        assert_eq!(quote_ident("order"), "`order`");
        assert_eq!(quote_ident("Age_at_Entry"), "Age_at_Entry");
        roundtrip("SELECT max(`Seating Capacity`) FROM stadium");
    }

    #[test]
    fn synthesized_or_under_and_gets_parens() {
        let e = Expr::binary(
            BinaryOp::And,
            Expr::binary(BinaryOp::Or, Expr::column(None, "a"), Expr::column(None, "b")),
            Expr::column(None, "c"),
        );
        assert_eq!(render_expr(&e), "(a OR b) AND c");
    }

    #[test]
    fn nested_unary_minus() {
        roundtrip("SELECT - -1 FROM t");
        roundtrip("SELECT -(a + b) FROM t");
    }
}
