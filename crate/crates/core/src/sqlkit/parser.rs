use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::SqlParseError;

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "offset", "union",
    "intersect", "except", "all", "distinct", "join", "inner", "left", "right", "full", "outer",
    "cross", "natural", "on", "using", "as", "and", "or", "not", "in", "like", "glob", "between",
    "is", "null", "case", "when", "then", "else", "end", "exists", "asc", "desc", "cast",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

/// Parses one SELECT statement (optionally `;`-terminated).
pub fn parse(sql: &str) -> Result<Query, SqlParseError> {
    let tokens = tokenize(sql)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: sql.len(),
    };
    let query = parser.parse_query()?;
    while parser.eat_symbol(";") {}
    if let Some(tok) = parser.peek() {
        return Err(SqlParseError::new(
            tok.offset,
            format!("unexpected trailing input {}", describe(tok)),
        ));
    }
    Ok(query)
}

fn describe(tok: &Token) -> String {
    match &tok.kind {
        TokenKind::Word(w) => format!("`{w}`"),
        TokenKind::QuotedIdent(w) => format!("identifier `{w}`"),
        TokenKind::Str(s) => format!("string {s:?}"),
        TokenKind::Number(n) => format!("number {n}"),
        TokenKind::Symbol(s) => format!("`{s}`"),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, SqlParseError> {
        let msg = msg.into();
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), describe);
        Err(SqlParseError::new(self.offset(), format!("{msg}, found {found}")))
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.keyword_at(0, kw)
    }

    fn keyword_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Some(Token { kind: TokenKind::Word(w), .. }) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected {}", kw.to_ascii_uppercase()))
        }
    }

    fn at_symbol(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Symbol(s), .. }) if *s == sym)
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.at_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<(), SqlParseError> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            self.error(format!("expected `{sym}`"))
        }
    }

    /// Identifier: a non-reserved word or a quoted identifier.
    fn parse_identifier(&mut self) -> Result<String, SqlParseError> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(TokenKind::QuotedIdent(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.error("expected identifier"),
        }
    }

    /// After a `.`, any word is accepted as a name.
    fn parse_member_name(&mut self) -> Result<String, SqlParseError> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w)) | Some(TokenKind::QuotedIdent(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.error("expected column name"),
        }
    }

    fn parse_optional_alias(&mut self) -> Result<Option<String>, SqlParseError> {
        if self.eat_keyword("as") {
            if let Some(Token {
                kind: TokenKind::Str(s),
                ..
            }) = self.peek()
            {
                let s = s.clone();
                self.pos += 1;
                return Ok(Some(s));
            }
            return self.parse_identifier().map(Some);
        }
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Word(w)) if !is_reserved(w) => self.parse_identifier().map(Some),
            Some(TokenKind::QuotedIdent(_)) => self.parse_identifier().map(Some),
            _ => Ok(None),
        }
    }

    fn parse_query(&mut self) -> Result<Query, SqlParseError> {
        let body = self.parse_set_expr()?;
        let mut order_by = Vec::new();
        if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            loop {
                let expr = self.parse_expr()?;
                let descending = if self.eat_keyword("desc") {
                    Some(true)
                } else if self.eat_keyword("asc") {
                    Some(false)
                } else {
                    None
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let limit = if self.eat_keyword("limit") {
            let first = self.parse_expr()?;
            if self.eat_keyword("offset") {
                Some(Limit {
                    count: first,
                    offset: Some(self.parse_expr()?),
                })
            } else if self.eat_symbol(",") {
                Some(Limit {
                    count: self.parse_expr()?,
                    offset: Some(first),
                })
            } else {
                Some(Limit {
                    count: first,
                    offset: None,
                })
            }
        } else {
            None
        };
        Ok(Query {
            body,
            order_by,
            limit,
        })
    }

    fn parse_set_expr(&mut self) -> Result<SetExpr, SqlParseError> {
        let mut left = SetExpr::Select(Box::new(self.parse_select()?));
        loop {
            let op = if self.eat_keyword("union") {
                SetOperator::Union
            } else if self.eat_keyword("intersect") {
                SetOperator::Intersect
            } else if self.eat_keyword("except") {
                SetOperator::Except
            } else {
                break;
            };
            let all = self.eat_keyword("all");
            let right = SetExpr::Select(Box::new(self.parse_select()?));
            left = SetExpr::SetOp {
                op,
                all,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_select(&mut self) -> Result<Select, SqlParseError> {
        self.expect_keyword("select")?;
        let distinct = if self.eat_keyword("distinct") {
            true
        } else {
            self.eat_keyword("all");
            false
        };
        let mut projection = Vec::new();
        loop {
            projection.push(self.parse_select_item()?);
            if !self.eat_symbol(",") {
                break;
            }
        }
        let from = if self.eat_keyword("from") {
            Some(self.parse_from()?)
        } else {
            None
        };
        let selection = if self.eat_keyword("where") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            loop {
                group_by.push(self.parse_expr()?);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let having = if self.eat_keyword("having") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok(Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
        })
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, SqlParseError> {
        if self.eat_symbol("*") {
            return Ok(SelectItem {
                expr: Expr::Wildcard(None),
                alias: None,
            });
        }
        let expr = self.parse_expr()?;
        let alias = self.parse_optional_alias()?;
        Ok(SelectItem { expr, alias })
    }

    fn parse_from(&mut self) -> Result<FromClause, SqlParseError> {
        let first = self.parse_table_factor()?;
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_symbol(",") {
                JoinKind::Comma
            } else if self.at_keyword("join") {
                self.pos += 1;
                JoinKind::Inner
            } else if self.at_keyword("inner") && self.keyword_at(1, "join") {
                self.pos += 2;
                JoinKind::Inner
            } else if self.at_keyword("cross") && self.keyword_at(1, "join") {
                self.pos += 2;
                JoinKind::Cross
            } else if self.at_keyword("natural") && self.keyword_at(1, "join") {
                self.pos += 2;
                JoinKind::Natural
            } else if self.at_keyword("left") {
                self.pos += 1;
                self.eat_keyword("outer");
                self.expect_keyword("join")?;
                JoinKind::Left
            } else {
                break;
            };
            let factor = self.parse_table_factor()?;
            let constraint = if self.eat_keyword("on") {
                Some(self.parse_expr()?)
            } else {
                None
            };
            if self.at_keyword("using") {
                return self.error("JOIN ... USING is not supported");
            }
            joins.push(Join {
                kind,
                factor,
                constraint,
            });
        }
        Ok(FromClause { first, joins })
    }

    fn parse_table_factor(&mut self) -> Result<TableFactor, SqlParseError> {
        if self.eat_symbol("(") {
            if !self.at_keyword("select") {
                return self.error("expected subquery");
            }
            let query = self.parse_query()?;
            self.expect_symbol(")")?;
            let alias = self.parse_optional_alias()?;
            return Ok(TableFactor::Derived {
                query: Box::new(query),
                alias,
            });
        }
        let name = self.parse_identifier()?;
        let alias = self.parse_optional_alias()?;
        Ok(TableFactor::Table { name, alias })
    }

    pub fn parse_expr(&mut self) -> Result<Expr, SqlParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_and()?;
        while self.eat_keyword("or") {
            let right = self.parse_and()?;
            left = Expr::binary(BinaryOp::Or, left, right);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_not()?;
        while self.eat_keyword("and") {
            let right = self.parse_not()?;
            left = Expr::binary(BinaryOp::And, left, right);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<Expr, SqlParseError> {
        if self.eat_keyword("not") {
            let expr = self.parse_not()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(expr),
            });
        }
        self.parse_equality()
    }

    fn parse_equality(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_relational()?;
        loop {
            if self.eat_symbol("=") || self.eat_symbol("==") {
                let right = self.parse_relational()?;
                left = Expr::binary(BinaryOp::Eq, left, right);
                continue;
            }
            if self.eat_symbol("!=") || self.eat_symbol("<>") {
                let right = self.parse_relational()?;
                left = Expr::binary(BinaryOp::NotEq, left, right);
                continue;
            }
            if self.eat_keyword("is") {
                let negated = self.eat_keyword("not");
                self.expect_keyword("null")?;
                left = Expr::IsNull {
                    expr: Box::new(left),
                    negated,
                };
                continue;
            }
            let negated = if self.at_keyword("not")
                && (self.keyword_at(1, "in")
                    || self.keyword_at(1, "like")
                    || self.keyword_at(1, "between"))
            {
                self.pos += 1;
                true
            } else {
                false
            };
            if self.eat_keyword("in") {
                left = self.parse_in_rhs(left, negated)?;
            } else if self.eat_keyword("like") {
                let pattern = self.parse_relational()?;
                left = Expr::Like {
                    expr: Box::new(left),
                    pattern: Box::new(pattern),
                    negated,
                };
            } else if self.eat_keyword("between") {
                let low = self.parse_relational()?;
                self.expect_keyword("and")?;
                let high = self.parse_relational()?;
                left = Expr::Between {
                    expr: Box::new(left),
                    low: Box::new(low),
                    high: Box::new(high),
                    negated,
                };
            } else {
                break;
            }
        }
        Ok(left)
    }

    fn parse_in_rhs(&mut self, left: Expr, negated: bool) -> Result<Expr, SqlParseError> {
        self.expect_symbol("(")?;
        if self.at_keyword("select") {
            let query = self.parse_query()?;
            self.expect_symbol(")")?;
            return Ok(Expr::InSubquery {
                expr: Box::new(left),
                query: Box::new(query),
                negated,
            });
        }
        let mut list = Vec::new();
        if !self.at_symbol(")") {
            loop {
                list.push(self.parse_expr()?);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        self.expect_symbol(")")?;
        Ok(Expr::InList {
            expr: Box::new(left),
            list,
            negated,
        })
    }

    fn parse_relational(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_additive()?;
        loop {
            let op = if self.eat_symbol("<=") {
                BinaryOp::LtEq
            } else if self.eat_symbol(">=") {
                BinaryOp::GtEq
            } else if self.eat_symbol("<") {
                BinaryOp::Lt
            } else if self.eat_symbol(">") {
                BinaryOp::Gt
            } else {
                break;
            };
            let right = self.parse_additive()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_additive(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = if self.eat_symbol("+") {
                BinaryOp::Plus
            } else if self.eat_symbol("-") {
                BinaryOp::Minus
            } else {
                break;
            };
            let right = self.parse_multiplicative()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_concat()?;
        loop {
            let op = if self.eat_symbol("*") {
                BinaryOp::Multiply
            } else if self.eat_symbol("/") {
                BinaryOp::Divide
            } else if self.eat_symbol("%") {
                BinaryOp::Modulo
            } else {
                break;
            };
            let right = self.parse_concat()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_concat(&mut self) -> Result<Expr, SqlParseError> {
        let mut left = self.parse_unary()?;
        while self.eat_symbol("||") {
            let right = self.parse_unary()?;
            left = Expr::binary(BinaryOp::Concat, left, right);
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expr, SqlParseError> {
        let op = if self.eat_symbol("-") {
            UnaryOp::Minus
        } else if self.eat_symbol("+") {
            UnaryOp::Plus
        } else {
            return self.parse_primary();
        };
        let expr = self.parse_unary()?;
        Ok(Expr::Unary {
            op,
            expr: Box::new(expr),
        })
    }

    fn parse_primary(&mut self) -> Result<Expr, SqlParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("expected expression");
        };
        match tok.kind {
            TokenKind::Number(n) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Number(n)))
            }
            TokenKind::Str(s) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::Symbol("(") => {
                self.pos += 1;
                if self.at_keyword("select") {
                    let query = self.parse_query()?;
                    self.expect_symbol(")")?;
                    return Ok(Expr::Subquery(Box::new(query)));
                }
                let inner = self.parse_expr()?;
                self.expect_symbol(")")?;
                Ok(Expr::Nested(Box::new(inner)))
            }
            TokenKind::QuotedIdent(_) => self.parse_column_ref(),
            TokenKind::Word(w) => {
                let lower = w.to_ascii_lowercase();
                match lower.as_str() {
                    "null" => {
                        self.pos += 1;
                        Ok(Expr::Literal(Literal::Null))
                    }
                    "case" => self.parse_case(),
                    "cast" => self.parse_cast(),
                    "exists" => {
                        self.pos += 1;
                        self.expect_symbol("(")?;
                        let query = self.parse_query()?;
                        self.expect_symbol(")")?;
                        Ok(Expr::Exists(Box::new(query)))
                    }
                    _ if is_reserved(&w) => self.error("expected expression"),
                    _ if matches!(self.peek_at(1), Some(Token { kind: TokenKind::Symbol("("), .. })) => {
                        self.parse_function(w)
                    }
                    _ => self.parse_column_ref(),
                }
            }
            _ => self.error("expected expression"),
        }
    }

    fn parse_column_ref(&mut self) -> Result<Expr, SqlParseError> {
        let first = self.parse_identifier()?;
        if self.eat_symbol(".") {
            if self.eat_symbol("*") {
                return Ok(Expr::Wildcard(Some(first)));
            }
            let name = self.parse_member_name()?;
            return Ok(Expr::Column(ColumnName {
                qualifier: Some(first),
                name,
            }));
        }
        Ok(Expr::Column(ColumnName {
            qualifier: None,
            name: first,
        }))
    }

    fn parse_function(&mut self, name: String) -> Result<Expr, SqlParseError> {
        self.pos += 2; // name and `(`
        let distinct = self.eat_keyword("distinct");
        let mut args = Vec::new();
        if self.eat_symbol("*") {
            args.push(Expr::Wildcard(None));
        } else if !self.at_symbol(")") {
            loop {
                args.push(self.parse_expr()?);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        self.expect_symbol(")")?;
        Ok(Expr::Function {
            name,
            distinct,
            args,
        })
    }

    fn parse_case(&mut self) -> Result<Expr, SqlParseError> {
        self.pos += 1;
        let operand = if self.at_keyword("when") {
            None
        } else {
            Some(Box::new(self.parse_expr()?))
        };
        let mut branches = Vec::new();
        while self.eat_keyword("when") {
            let cond = self.parse_expr()?;
            self.expect_keyword("then")?;
            let result = self.parse_expr()?;
            branches.push((cond, result));
        }
        if branches.is_empty() {
            return self.error("expected WHEN");
        }
        let else_result = if self.eat_keyword("else") {
            Some(Box::new(self.parse_expr()?))
        } else {
            None
        };
        self.expect_keyword("end")?;
        Ok(Expr::Case {
            operand,
            branches,
            else_result,
        })
    }

    fn parse_cast(&mut self) -> Result<Expr, SqlParseError> {
        self.pos += 1;
        self.expect_symbol("(")?;
        let expr = self.parse_expr()?;
        self.expect_keyword("as")?;
        let mut words = Vec::new();
        while let Some(Token {
            kind: TokenKind::Word(w),
            ..
        }) = self.peek()
        {
            words.push(w.to_ascii_uppercase());
            self.pos += 1;
        }
        if words.is_empty() {
            return self.error("expected type name");
        }
        self.expect_symbol(")")?;
        Ok(Expr::Cast {
            expr: Box::new(expr),
            type_name: words.join(" "),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_star_single_table() {
        let q = parse("SELECT count(*) FROM singer").unwrap();
        let sel = q.selects()[0];
        assert_eq!(sel.projection.len(), 1);
        assert!(matches!(
            &sel.projection[0].expr,
            Expr::Function { name, args, .. } if name == "count" && args == &vec![Expr::Wildcard(None)]
        ));
        assert_eq!(sel.from.as_ref().unwrap().factors().count(), 1);
    }

    #[test]
    fn bare_select_is_error() {
        let err = parse("SELECT").unwrap_err();
        assert_eq!(err.offset, 6);
    }

    #[test]
    fn between_binds_its_own_and() {
        let q = parse("SELECT a FROM t WHERE x BETWEEN 1 AND 2 AND y = 3").unwrap();
        let sel = q.selects()[0];
        assert!(matches!(
            sel.selection.as_ref().unwrap(),
            Expr::Binary { op: BinaryOp::And, left, .. } if matches!(**left, Expr::Between { .. })
        ));
    }

    #[test]
    fn not_in_subquery() {
        let q = parse("SELECT name FROM stadium WHERE stadium_id NOT IN (SELECT stadium_id FROM concert)")
            .unwrap();
        assert!(matches!(
            q.selects()[0].selection.as_ref().unwrap(),
            Expr::InSubquery { negated: true, .. }
        ));
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse("SELECT a FROM t WHERE").is_err());
        assert!(parse("SELECT a FROM t t2 t3").is_err());
        assert!(parse("DELETE FROM t").is_err());
    }

    #[test]
    fn limit_with_comma_offset() {
        let q = parse("SELECT a FROM t LIMIT 2, 5").unwrap();
        let limit = q.limit.unwrap();
        assert_eq!(limit.count, Expr::Literal(Literal::Number("5".into())));
        assert_eq!(limit.offset, Some(Expr::Literal(Literal::Number("2".into()))));
    }
}
