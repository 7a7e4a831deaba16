//! Scope-aware traversal: visits every expression together with the clause it
//! sits in and the table bindings visible at that point.

use super::ast::*;
use crate::corpus::{ColumnRef, SchemaDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Clause {
    Projection,
    JoinOn,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
}

#[derive(Debug, Clone)]
pub(crate) struct Binding {
    /// Lower-cased name the binding is visible under (alias, else table name).
    pub name: String,
    /// Lower-cased base table name, also accepted as a qualifier.
    pub table_name: Option<String>,
    /// Canonical table name; `None` for derived tables.
    pub table: Option<String>,
}

pub(crate) type Scope = Vec<Binding>;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Resolution {
    Column(ColumnRef),
    /// Column of a derived table or an output alias; not a base column.
    Opaque,
    /// Qualifier does not name any visible binding.
    UnknownQualifier(String),
    /// Unqualified name not found on any visible table.
    Unresolved,
}

pub(crate) struct Ctx<'a> {
    pub clause: Clause,
    /// 0 for the outermost query's own SELECT blocks.
    pub depth: usize,
    scopes: &'a [Scope],
    schema: &'a SchemaDef,
}

impl Ctx<'_> {
    pub fn resolve(&self, col: &ColumnName) -> Resolution {
        resolve_in(self.scopes, self.schema, col)
    }
}

pub(crate) fn resolve_in(scopes: &[Scope], schema: &SchemaDef, col: &ColumnName) -> Resolution {
    if let Some(q) = &col.qualifier {
        let q = q.to_lowercase();
        for scope in scopes.iter().rev() {
            let hit = scope
                .iter()
                .find(|b| b.name == q)
                .or_else(|| scope.iter().find(|b| b.table_name.as_deref() == Some(&q)));
            if let Some(b) = hit {
                return match &b.table {
                    Some(table) => match schema.table(table).and_then(|t| t.column(&col.name)) {
                        Some(c) => Resolution::Column(ColumnRef::new(table.clone(), c.name.clone())),
                        None => Resolution::Column(ColumnRef::new(table.clone(), col.name.clone())),
                    },
                    None => Resolution::Opaque,
                };
            }
        }
        return Resolution::UnknownQualifier(col.qualifier.clone().unwrap_or_default());
    }
    let mut saw_derived = false;
    for scope in scopes.iter().rev() {
        for b in scope {
            match &b.table {
                Some(table) => {
                    if let Some(c) = schema.table(table).and_then(|t| t.column(&col.name)) {
                        return Resolution::Column(ColumnRef::new(table.clone(), c.name.clone()));
                    }
                }
                None => saw_derived = true,
            }
        }
    }
    if saw_derived {
        Resolution::Opaque
    } else {
        Resolution::Unresolved
    }
}

/// Whether the visitor wants the walker to descend into the node's children.
pub(crate) type Descend = bool;

pub(crate) struct Walker<'a, F> {
    schema: &'a SchemaDef,
    scopes: Vec<Scope>,
    depth: usize,
    visit: F,
    /// Tables named in FROM clauses that are absent from the schema.
    pub unknown_tables: Vec<String>,
    /// Scope of every SELECT block visited, in visiting order.
    pub scopes_seen: Vec<Scope>,
}

impl<'a, F> Walker<'a, F>
where
    F: FnMut(&mut Expr, &Ctx<'_>) -> Descend,
{
    pub fn new(schema: &'a SchemaDef, visit: F) -> Self {
        Walker {
            schema,
            scopes: Vec::new(),
            depth: 0,
            visit,
            unknown_tables: Vec::new(),
            scopes_seen: Vec::new(),
        }
    }

    pub fn query(&mut self, q: &mut Query) {
        self.set_expr(&mut q.body);
        if !q.order_by.is_empty() || q.limit.is_some() {
            let scope = first_select(&q.body)
                .map(|s| self.scope_for(s))
                .unwrap_or_default();
            self.scopes.push(scope);
            for item in &mut q.order_by {
                self.expr(&mut item.expr, Clause::OrderBy);
            }
            if let Some(limit) = &mut q.limit {
                self.expr(&mut limit.count, Clause::Limit);
                if let Some(o) = &mut limit.offset {
                    self.expr(o, Clause::Limit);
                }
            }
            self.scopes.pop();
        }
    }

    fn set_expr(&mut self, body: &mut SetExpr) {
        match body {
            SetExpr::Select(s) => self.select(s),
            SetExpr::SetOp { left, right, .. } => {
                self.set_expr(left);
                self.set_expr(right);
            }
        }
    }

    fn scope_for(&mut self, select: &Select) -> Scope {
        let mut scope = Vec::new();
        let Some(from) = &select.from else {
            return scope;
        };
        for factor in from.factors() {
            match factor {
                TableFactor::Table { name, alias } => {
                    let table = self.schema.table(name).map(|t| t.name.clone());
                    if table.is_none() && !self.unknown_tables.iter().any(|t| t.eq_ignore_ascii_case(name)) {
                        self.unknown_tables.push(name.clone());
                    }
                    scope.push(Binding {
                        name: alias.as_deref().unwrap_or(name).to_lowercase(),
                        table_name: Some(name.to_lowercase()),
                        table,
                    });
                }
                TableFactor::Derived { alias, .. } => scope.push(Binding {
                    name: alias.as_deref().unwrap_or("").to_lowercase(),
                    table_name: None,
                    table: None,
                }),
            }
        }
        scope
    }

    fn select(&mut self, s: &mut Select) {
        if let Some(from) = &mut s.from {
            for factor in std::iter::once(&mut from.first).chain(from.joins.iter_mut().map(|j| &mut j.factor)) {
                if let TableFactor::Derived { query, .. } = factor {
                    self.depth += 1;
                    self.query(query);
                    self.depth -= 1;
                }
            }
        }
        let scope = self.scope_for(s);
        self.scopes_seen.push(scope.clone());
        self.scopes.push(scope);
        for item in &mut s.projection {
            self.expr(&mut item.expr, Clause::Projection);
        }
        if let Some(from) = &mut s.from {
            for join in &mut from.joins {
                if let Some(on) = &mut join.constraint {
                    self.expr(on, Clause::JoinOn);
                }
            }
        }
        if let Some(w) = &mut s.selection {
            self.expr(w, Clause::Where);
        }
        for g in &mut s.group_by {
            self.expr(g, Clause::GroupBy);
        }
        if let Some(h) = &mut s.having {
            self.expr(h, Clause::Having);
        }
        self.scopes.pop();
    }

    pub fn expr(&mut self, e: &mut Expr, clause: Clause) {
        let descend = {
            let ctx = Ctx {
                clause,
                depth: self.depth,
                scopes: &self.scopes,
                schema: self.schema,
            };
            (self.visit)(e, &ctx)
        };
        if !descend {
            return;
        }
        match e {
            Expr::Column(_) | Expr::Wildcard(_) | Expr::Literal(_) => {}
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } | Expr::Nested(expr) => {
                self.expr(expr, clause)
            }
            Expr::Cast { expr, .. } => self.expr(expr, clause),
            Expr::Binary { left, right, .. } => {
                self.expr(left, clause);
                self.expr(right, clause);
            }
            Expr::Like { expr, pattern, .. } => {
                self.expr(expr, clause);
                self.expr(pattern, clause);
            }
            Expr::InList { expr, list, .. } => {
                self.expr(expr, clause);
                for item in list {
                    self.expr(item, clause);
                }
            }
            Expr::InSubquery { expr, query, .. } => {
                self.expr(expr, clause);
                self.subquery(query);
            }
            Expr::Between { expr, low, high, .. } => {
                self.expr(expr, clause);
                self.expr(low, clause);
                self.expr(high, clause);
            }
            Expr::Function { args, .. } => {
                for a in args {
                    self.expr(a, clause);
                }
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                if let Some(op) = operand {
                    self.expr(op, clause);
                }
                for (c, r) in branches {
                    self.expr(c, clause);
                    self.expr(r, clause);
                }
                if let Some(e) = else_result {
                    self.expr(e, clause);
                }
            }
            Expr::Exists(query) | Expr::Subquery(query) => self.subquery(query),
        }
    }

    fn subquery(&mut self, q: &mut Query) {
        self.depth += 1;
        self.query(q);
        self.depth -= 1;
    }
}

fn first_select(body: &SetExpr) -> Option<&Select> {
    match body {
        SetExpr::Select(s) => Some(s),
        SetExpr::SetOp { left, .. } => first_select(left),
    }
}

pub(crate) struct WalkOutcome {
    pub unknown_tables: Vec<String>,
    pub scopes: Vec<Scope>,
}

/// Visits every expression of `query` (mutably) with scope information.
pub(crate) fn walk_query<F>(query: &mut Query, schema: &SchemaDef, visit: F) -> WalkOutcome
where
    F: FnMut(&mut Expr, &Ctx<'_>) -> Descend,
{
    let mut walker = Walker::new(schema, visit);
    walker.query(query);
    WalkOutcome {
        unknown_tables: walker.unknown_tables,
        scopes: walker.scopes_seen,
    }
}
