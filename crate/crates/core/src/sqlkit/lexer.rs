use super::SqlParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word; keywords are recognised by the parser, case-insensitively.
    Word(String),
    /// Identifier written with backticks or brackets.
    QuotedIdent(String),
    /// Single- or double-quoted string. Spider uses `"..."` for string literals.
    Str(String),
    Number(String),
    Symbol(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

const SYMBOLS: &[&str] = &[
    "<>", "!=", "<=", ">=", "==", "||", "=", "<", ">", "+", "-", "*", "/", "%", "(", ")", ",",
    ".", ";",
];

pub fn tokenize(sql: &str) -> Result<Vec<Token>, SqlParseError> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c == b'\'' || c == b'"' {
            let (text, next) = read_quoted(sql, i, c)?;
            tokens.push(Token {
                kind: TokenKind::Str(text),
                offset: start,
            });
            i = next;
        } else if c == b'`' {
            let (text, next) = read_quoted(sql, i, b'`')?;
            tokens.push(Token {
                kind: TokenKind::QuotedIdent(text),
                offset: start,
            });
            i = next;
        } else if c == b'[' {
            let end = sql[i + 1..]
                .find(']')
                .ok_or_else(|| SqlParseError::new(start, "unterminated bracket identifier"))?;
            tokens.push(Token {
                kind: TokenKind::QuotedIdent(sql[i + 1..i + 1 + end].to_string()),
                offset: start,
            });
            i = i + 2 + end;
        } else if c.is_ascii_digit()
            || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            i = read_number(bytes, i);
            tokens.push(Token {
                kind: TokenKind::Number(sql[start..i].to_string()),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80)
            {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Word(sql[start..i].to_string()),
                offset: start,
            });
        } else if let Some(sym) = SYMBOLS.iter().find(|s| sql[i..].starts_with(**s)) {
            i += sym.len();
            tokens.push(Token {
                kind: TokenKind::Symbol(sym),
                offset: start,
            });
        } else {
            return Err(SqlParseError::new(
                start,
                format!("unexpected character {:?}", sql[i..].chars().next().unwrap_or('?')),
            ));
        }
    }
    Ok(tokens)
}

fn read_quoted(sql: &str, start: usize, quote: u8) -> Result<(String, usize), SqlParseError> {
    let bytes = sql.as_bytes();
    let mut out = String::new();
    let mut i = start + 1;
    let mut seg = i;
    while i < bytes.len() {
        if bytes[i] == quote {
            if bytes.get(i + 1) == Some(&quote) {
                out.push_str(&sql[seg..=i]);
                i += 2;
                seg = i;
                continue;
            }
            out.push_str(&sql[seg..i]);
            return Ok((out, i + 1));
        }
        i += 1;
    }
    Err(SqlParseError::new(start, "unterminated quoted text"))
}

fn read_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_quotes_escape() {
        let toks = tokenize("'it''s'").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Str("it's".into()));
    }

    #[test]
    fn operators_prefer_longest() {
        let toks = tokenize("a<>b").unwrap();
        assert_eq!(toks[1].kind, TokenKind::Symbol("<>"));
    }

    #[test]
    fn unterminated_string_reports_offset() {
        let err = tokenize("SELECT 'abc").unwrap_err();
        assert_eq!(err.offset, 7);
    }
}
