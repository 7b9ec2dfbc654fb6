use super::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Number(f64),
    LBrace,
    RBrace,
    Colon,
    Comma,
    Semi,
    Le,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Number(_) => "number".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub(crate) fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let span = |len: usize| SourceSpan {
            line,
            column,
            length: len,
        };
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' {
            cur.bump();
            if cur.peek() == Some('/') {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                diags.push(Diagnostic::error(span(1), "unexpected character `/`"));
            }
            continue;
        }
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            cur.bump();
            out.push(Token { tok, span: span(1) });
            continue;
        }
        if c == '<' || c == '>' {
            cur.bump();
            if cur.peek() == Some('=') {
                cur.bump();
                out.push(Token {
                    tok: if c == '<' { Tok::Le } else { Tok::Ge },
                    span: span(2),
                });
            } else {
                diags.push(Diagnostic::error(span(1), format!("expected `{c}=`")));
            }
            continue;
        }
        if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| is_ident_char(*c)) {
                s.push(c);
                cur.bump();
            }
            let len = s.chars().count();
            out.push(Token {
                tok: Tok::Ident(s),
                span: span(len),
            });
            continue;
        }
        if c.is_ascii_digit() || c == '-' || c == '+' {
            let mut s = String::new();
            s.push(c);
            cur.bump();
            while let Some(c) = cur.peek() {
                let after_exp = matches!(s.chars().last(), Some('e' | 'E'));
                if c.is_ascii_digit()
                    || c == '.'
                    || c == 'e'
                    || c == 'E'
                    || (after_exp && (c == '+' || c == '-'))
                {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            let len = s.chars().count();
            match parse_number(&s) {
                Some(v) => out.push(Token {
                    tok: Tok::Number(v),
                    span: span(len),
                }),
                None => diags.push(Diagnostic::error(
                    span(len),
                    format!("malformed number `{s}`"),
                )),
            }
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut s = String::new();
            let mut len = 1;
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                let (eline, ecol) = (cur.line, cur.column);
                cur.bump();
                len += 1;
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => {
                        let esc = cur.peek();
                        if esc.is_some_and(|e| e != '\n') {
                            cur.bump();
                            len += 1;
                        }
                        match esc {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('r') => s.push('\r'),
                            Some('u') => {
                                let (ch, used) = unicode_escape(&mut cur);
                                len += used;
                                match ch {
                                    Some(ch) => s.push(ch),
                                    None => diags.push(Diagnostic::error(
                                        SourceSpan {
                                            line: eline,
                                            column: ecol,
                                            length: 2 + used,
                                        },
                                        "malformed unicode escape, expected `\\u{HEX}`",
                                    )),
                                }
                            }
                            other => diags.push(Diagnostic::error(
                                SourceSpan {
                                    line: eline,
                                    column: ecol,
                                    length: if other.is_some_and(|e| e != '\n') {
                                        2
                                    } else {
                                        1
                                    },
                                },
                                match other {
                                    Some(e) if e != '\n' => format!("unknown escape `\\{e}`"),
                                    _ => "unfinished escape".to_string(),
                                },
                            )),
                        }
                    }
                    c => s.push(c),
                }
            }
            if closed {
                out.push(Token {
                    tok: Tok::Str(s),
                    span: span(len),
                });
            } else {
                diags.push(Diagnostic::error(span(len), "unterminated string"));
            }
            continue;
        }
        cur.bump();
        diags.push(Diagnostic::error(
            span(1),
            format!("unexpected character `{}`", c.escape_debug()),
        ));
    }
    let end = SourceSpan {
        line: cur.line,
        column: cur.column,
        length: 0,
    };
    out.push(Token {
        tok: Tok::Eof,
        span: end,
    });
    out
}

fn unicode_escape(cur: &mut Cursor<'_>) -> (Option<char>, usize) {
    let mut used = 0;
    if cur.peek() != Some('{') {
        return (None, used);
    }
    cur.bump();
    used += 1;
    let mut hex = String::new();
    while let Some(c) = cur.peek().filter(|c| c.is_ascii_hexdigit()) {
        hex.push(c);
        cur.bump();
        used += 1;
    }
    if cur.peek() != Some('}') || hex.is_empty() || hex.len() > 6 {
        return (None, used);
    }
    cur.bump();
    used += 1;
    (
        u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32),
        used,
    )
}

/// Decimal with optional sign, fraction and exponent. Rejects forms such
/// as `1.`, `.5`, `1e` and anything `f64::from_str` would read as a
/// special value.
fn parse_number(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    if let Some(e) = exp {
        if !digits(e.strip_prefix(['-', '+']).unwrap_or(e)) {
            return None;
        }
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}
