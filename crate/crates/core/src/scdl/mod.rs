//! SCDL, the textual form of a safety case.
//!
//! ```text
//! document  := "case" STRING "{" item* "}"
//! item      := element | spi | evidence | fault_tree | interface | hazard_log
//! element   := KIND ID STRING block?
//! block     := "{" ( ("supported_by" | "in_context_of" | "evidence" | "spi") ":" ID ("," ID)* ";"? )* "}"
//! spi       := "spi" ID "on" ID "{" spi_field* "}"
//! spi_field := "metric" STRING ";"
//!            | "threshold" ("<=" | ">=") NUMBER "per" UNIT ";"
//!            | "kind" ("leading" | "lagging") ("behavioral" | "operational") ";"
//!            | "confidence" NUMBER ";"
//! evidence  := "evidence" ID "uri" STRING "version" ("latest" | STRING)
//!              ("sensitivity" ("strict" | "robust_to_editorial"))? ";"
//! fault_tree:= "fault_tree" ID "for" ID "{" ("mission" NUMBER UNIT ";")? "top" gate "}"
//! gate      := ("or" | "and") ID? ("budget" NUMBER)? "{" (gate | basic)+ "}"
//! basic     := "basic" ID "rate" (NUMBER | "tbd") basic_attr* ";"
//! basic_attr:= "spi" ID | "kind" EVENT_KIND | "desc" STRING | "budget" NUMBER
//! interface := "interface" "{" (("assume" | "guarantee") TAG STRING ";")* "}"
//! hazard_log:= "hazard_log" STRING ";"
//! ```
//!
//! Ids share one namespace across elements, SPIs, evidence links and fault
//! trees. Gate and basic-event ids are scoped to their tree; a basic event
//! may be repeated (a shared event) only with an identical definition.
//! A gate written without an id is named `<tree>.g<n>`, `n` being its
//! position in a pre-order walk of the tree starting at 0 for the top gate.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::argument::SafetyCase;
use crate::report::Severity;

pub use printer::print;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    /// In characters.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.span.line, self.span.column, self.severity, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseResult {
    /// Present only when there are no error diagnostics.
    pub case: Option<SafetyCase>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}

pub fn parse(text: &str) -> ParseResult {
    let mut diagnostics = Vec::new();
    let tokens = lexer::lex(text, &mut diagnostics);
    let case = parser::parse_tokens(&tokens, &mut diagnostics);
    diagnostics
        .sort_by(|a, b| (a.span, a.severity, &a.message).cmp(&(b.span, b.severity, &b.message)));
    diagnostics.dedup();
    let ok = !diagnostics.iter().any(Diagnostic::is_error);
    ParseResult {
        case: case.filter(|_| ok).map(SafetyCase::normalized),
        diagnostics,
    }
}

/// Like [`parse`], for input that may not be UTF-8.
pub fn parse_bytes(bytes: &[u8]) -> ParseResult {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let line = 1 + valid.matches('\n').count();
            let column = 1 + valid
                .rsplit('\n')
                .next()
                .unwrap_or_default()
                .chars()
                .count();
            ParseResult {
                case: None,
                diagnostics: vec![Diagnostic::error(
                    SourceSpan {
                        line,
                        column,
                        length: 0,
                    },
                    format!("input is not valid UTF-8 (byte offset {})", e.valid_up_to()),
                )],
            }
        }
    }
}

/// Escapes `s` for use between double quotes.
pub fn escape_string_body(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_utf8_gives_one_error() {
        let r = parse_bytes(b"case \"x\" {\n  goal G1 \"\xff\" }");
        assert_eq!(r.diagnostics.len(), 1);
        assert_eq!(r.diagnostics[0].span.line, 2);
        assert_eq!(r.diagnostics[0].span.column, 12);
    }

    #[test]
    fn escape_round_trips_through_lexer() {
        let raw = "q\"b\\n\n\t\u{1}é";
        let text = format!("case \"{}\" {{\n}}\n", escape_string_body(raw));
        let r = parse(&text);
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        assert_eq!(r.case.unwrap().name, raw);
    }
}
