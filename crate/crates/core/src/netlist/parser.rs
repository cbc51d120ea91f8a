//! Line-oriented recursive-descent parser.
//!
//! ```text
//! netlist   = { line } ;
//! line      = [ statement ] [ "#" comment ] newline ;
//! statement = "supply"   name node node value
//!           | "resistor" name node node value
//!           | "dea"      name node node { pair }
//!           | "des"      name node node { pair }
//!           | "foot"     name ident ident { pair }
//!           | "param"    { kind "." pair } ;
//! pair      = key "=" ( value | ident ) ;
//! value     = number [ "p" | "n" | "u" | "m" | "k" | "Meg" | "G" ] [ "V" | "ohm" | "F" | "s" ] ;
//! ```
//!
//! Keywords, scale suffixes and unit letters are case-insensitive;
//! identifiers are case-sensitive.

use super::ast::{keys_for, KeySpec, Netlist, Param, ParamValue, Statement, StatementKind, ValueKind};
use super::diagnostics::{Code, Diagnostic, Span};
use super::units::{parse_quantity, Unit, ValueError};

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Word(String),
    Equals,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    span: Span,
}

fn lex_line(line: &str, line_no: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut col = 0;
    let flush = |current: &mut String, start: usize, end: usize, tokens: &mut Vec<Token>| {
        if !current.is_empty() {
            tokens.push(Token {
                kind: TokenKind::Word(std::mem::take(current)),
                span: Span::new(line_no, start, end),
            });
        }
    };
    for ch in line.chars() {
        col += 1;
        if ch == '#' {
            flush(&mut current, start, col, &mut tokens);
            return tokens;
        }
        if ch.is_whitespace() {
            flush(&mut current, start, col, &mut tokens);
        } else if ch == '=' {
            flush(&mut current, start, col, &mut tokens);
            tokens.push(Token {
                kind: TokenKind::Equals,
                span: Span::new(line_no, col, col + 1),
            });
        } else {
            if current.is_empty() {
                start = col;
            }
            current.push(ch);
        }
    }
    flush(&mut current, start, col + 1, &mut tokens);
    tokens
}

fn is_element_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_node_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse netlist bytes. Invalid UTF-8 yields a diagnostic, never a panic.
pub fn parse_bytes(bytes: &[u8]) -> Result<Netlist, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(err) => {
            let valid = &bytes[..err.valid_up_to()];
            let line = valid.iter().filter(|b| **b == b'\n').count() + 1;
            let line_start = valid.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
            let column = String::from_utf8_lossy(&valid[line_start..]).chars().count() + 1;
            let mut diagnostics = vec![Diagnostic::error(
                Code::InvalidUtf8,
                Span::new(line, column, column + 1),
                "netlist is not valid UTF-8",
            )];
            if let Err(more) = parse(&String::from_utf8_lossy(bytes)) {
                diagnostics.extend(more);
            }
            Err(diagnostics)
        }
    }
}

/// Parse netlist text into an AST, collecting every syntax diagnostic.
pub fn parse(text: &str) -> Result<Netlist, Vec<Diagnostic>> {
    let mut statements = Vec::new();
    let mut diagnostics = Vec::new();
    for (index, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = lex_line(line, index + 1);
        if tokens.is_empty() {
            continue;
        }
        let mut parser = LineParser {
            tokens: &tokens,
            pos: 0,
            diagnostics: &mut diagnostics,
        };
        if let Some(statement) = parser.statement() {
            statements.push(statement);
        }
    }
    if diagnostics.is_empty() {
        Ok(Netlist { statements })
    } else {
        Err(diagnostics)
    }
}

struct LineParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    diagnostics: &'a mut Vec<Diagnostic>,
}

impl LineParser<'_> {
    fn line_span(&self) -> Span {
        let first = self.tokens[0].span;
        let last = self.tokens[self.tokens.len() - 1].span;
        Span::new(first.line, first.column, last.end_column)
    }

    fn end_span(&self) -> Span {
        let last = self.tokens[self.tokens.len() - 1].span;
        // point at the last token so the location stays inside the statement
        Span::new(last.line, last.column, last.end_column)
    }

    fn error(&mut self, code: Code, span: Span, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::error(code, span, message));
    }

    fn next_word(&mut self, what: &str) -> Option<(String, Span)> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Word(w),
                span,
            }) => {
                self.pos += 1;
                Some((w.clone(), *span))
            }
            Some(tok) => {
                let span = tok.span;
                self.error(Code::Syntax, span, format!("unexpected '=', expected {what}"));
                None
            }
            None => {
                let span = self.end_span();
                self.error(Code::Syntax, span, format!("expected {what} before end of line"));
                None
            }
        }
    }

    fn element_name(&mut self) -> Option<(String, Span)> {
        let (name, span) = self.next_word("element name")?;
        if !is_element_name(&name) {
            self.error(Code::BadIdentifier, span, format!("invalid element name '{name}'"));
            return None;
        }
        Some((name, span))
    }

    fn node(&mut self) -> Option<(String, Span)> {
        let (name, span) = self.next_word("node name")?;
        if !is_node_name(&name) {
            self.error(Code::BadIdentifier, span, format!("invalid node name '{name}'"));
            return None;
        }
        Some((name, span))
    }

    fn number(&mut self, text: &str, span: Span, unit: Option<Unit>) -> Option<f64> {
        match parse_quantity(text) {
            Ok(q) => {
                if q.unit.is_some() && q.unit != unit {
                    let expected = unit.map_or("a dimensionless value".to_string(), |u| format!("unit {u}"));
                    let found = q.unit.map(|u| u.to_string()).unwrap_or_default();
                    self.error(
                        Code::UnitMismatch,
                        span,
                        format!("'{text}' carries unit {found}, expected {expected}"),
                    );
                    return None;
                }
                Some(q.value)
            }
            Err(ValueError::BadSuffix(s)) => {
                self.error(Code::BadUnit, span, format!("unknown unit suffix '{s}' in '{text}'"));
                None
            }
            Err(ValueError::NotANumber) => {
                self.error(Code::BadValue, span, format!("expected a number, found '{text}'"));
                None
            }
            Err(ValueError::OutOfRange) => {
                self.error(Code::BadValue, span, format!("'{text}' is out of range"));
                None
            }
        }
    }

    fn value(&mut self, unit: Unit) -> Option<(f64, Span)> {
        let (text, span) = self.next_word("value")?;
        self.number(&text, span, Some(unit)).map(|v| (v, span))
    }

    fn statement(&mut self) -> Option<Statement> {
        let (keyword, kw_span) = self.next_word("keyword")?;
        let keyword = keyword.to_ascii_lowercase();
        let mut spans = vec![kw_span];
        let kind = match keyword.as_str() {
            "supply" | "resistor" => {
                let (name, s0) = self.element_name()?;
                let (a, s1) = self.node()?;
                let (b, s2) = self.node()?;
                let unit = if keyword == "supply" { Unit::Volt } else { Unit::Ohm };
                let (value, s3) = self.value(unit)?;
                spans.extend([s0, s1, s2, s3]);
                self.no_trailing()?;
                if keyword == "supply" {
                    StatementKind::Supply {
                        name,
                        pos: a,
                        neg: b,
                        voltage: value,
                    }
                } else {
                    StatementKind::Resistor {
                        name,
                        a,
                        b,
                        resistance: value,
                    }
                }
            }
            "dea" | "des" => {
                let (name, s0) = self.element_name()?;
                let (a, s1) = self.node()?;
                let (b, s2) = self.node()?;
                spans.extend([s0, s1, s2]);
                let params = self.pairs(keys_for(&keyword).unwrap(), None)?;
                if keyword == "dea" {
                    StatementKind::Dea { name, a, b, params }
                } else {
                    StatementKind::Des { name, a, b, params }
                }
            }
            "foot" => {
                let (name, s0) = self.element_name()?;
                let (left, s1) = self.element_name()?;
                let (right, s2) = self.element_name()?;
                spans.extend([s0, s1, s2]);
                let params = self.pairs(keys_for("foot").unwrap(), None)?;
                StatementKind::Foot {
                    name,
                    left,
                    right,
                    params,
                }
            }
            "param" => {
                let params = self.pairs(&[], Some(()))?;
                StatementKind::Param { params }
            }
            other => {
                self.error(
                    Code::UnknownStatement,
                    kw_span,
                    format!("unknown statement '{other}', expected supply, resistor, dea, des, foot or param"),
                );
                return None;
            }
        };
        Some(Statement {
            kind,
            span: self.line_span(),
            token_spans: spans,
        })
    }

    fn no_trailing(&mut self) -> Option<()> {
        if let Some(tok) = self.tokens.get(self.pos) {
            let span = tok.span;
            self.error(Code::Syntax, span, "unexpected token after statement");
            return None;
        }
        Some(())
    }

    /// `key=value` pairs. With `qualified`, keys are `kind.key` overrides.
    fn pairs(&mut self, keys: &[KeySpec], qualified: Option<()>) -> Option<Vec<Param>> {
        let mut params: Vec<Param> = Vec::new();
        let mut ok = true;
        while self.pos < self.tokens.len() {
            let (key, key_span) = self.next_word("parameter name")?;
            match self.tokens.get(self.pos) {
                Some(Token {
                    kind: TokenKind::Equals,
                    ..
                }) => self.pos += 1,
                _ => {
                    self.error(Code::Syntax, key_span, format!("expected '=' after '{key}'"));
                    return None;
                }
            }
            let (raw, value_span) = self.next_word("parameter value")?;
            let span = Span::new(key_span.line, key_span.column, value_span.end_column);
            let spec = if qualified.is_some() {
                key.split_once('.')
                    .and_then(|(kind, k)| keys_for(kind).and_then(|ks| ks.iter().find(|s| s.name == k)))
                    .filter(|s| s.name != "coupled")
            } else {
                keys.iter().find(|s| s.name == key)
            };
            let Some(spec) = spec else {
                let hint = if qualified.is_some() {
                    "overrides take the form dea.<key>, des.<key> or foot.<key>".to_string()
                } else {
                    format!(
                        "expected one of: {}",
                        keys.iter().map(|k| k.name).collect::<Vec<_>>().join(", ")
                    )
                };
                self.error(Code::UnknownKey, key_span, format!("unknown parameter '{key}'; {hint}"));
                ok = false;
                continue;
            };
            if params.iter().any(|p| p.key == key) {
                self.error(Code::DuplicateKey, key_span, format!("parameter '{key}' given twice"));
                ok = false;
                continue;
            }
            let value = match spec.kind {
                ValueKind::Word => {
                    if !is_element_name(&raw) {
                        self.error(Code::BadValue, value_span, format!("'{raw}' is not a valid identifier"));
                        ok = false;
                        continue;
                    }
                    ParamValue::Word(raw)
                }
                ValueKind::Number(unit) => match self.number(&raw, value_span, unit) {
                    Some(v) => ParamValue::Number(v),
                    None => {
                        ok = false;
                        continue;
                    }
                },
            };
            params.push(Param { key, value, span });
        }
        ok.then_some(params)
    }
}
