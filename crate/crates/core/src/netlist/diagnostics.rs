use std::fmt;

/// A source location, 1-based. `end_column` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub end_column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize, end_column: usize) -> Self {
        Span {
            line,
            column,
            end_column,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.line == other.line && self.column <= other.column && other.column < self.end_column.max(self.column + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// Machine-readable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Code {
    InvalidUtf8,
    BadUnit,
    UnitMismatch,
    Syntax,
    UnknownStatement,
    BadIdentifier,
    UnknownKey,
    DuplicateKey,
    BadValue,
    DuplicateName,
    NoGround,
    NoSupply,
    DanglingNode,
    Disconnected,
    ShortedElement,
    MissingCoupling,
    UnknownCoupling,
    UnknownDea,
    FootSameDea,
    InvalidParameter,
}

impl Code {
    pub const ALL: [Code; 20] = [
        Code::InvalidUtf8,
        Code::BadUnit,
        Code::UnitMismatch,
        Code::Syntax,
        Code::UnknownStatement,
        Code::BadIdentifier,
        Code::UnknownKey,
        Code::DuplicateKey,
        Code::BadValue,
        Code::DuplicateName,
        Code::NoGround,
        Code::NoSupply,
        Code::DanglingNode,
        Code::Disconnected,
        Code::ShortedElement,
        Code::MissingCoupling,
        Code::UnknownCoupling,
        Code::UnknownDea,
        Code::FootSameDea,
        Code::InvalidParameter,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Code::InvalidUtf8 => "invalid-utf8",
            Code::BadUnit => "bad-unit",
            Code::UnitMismatch => "unit-mismatch",
            Code::Syntax => "syntax",
            Code::UnknownStatement => "unknown-statement",
            Code::BadIdentifier => "bad-identifier",
            Code::UnknownKey => "unknown-key",
            Code::DuplicateKey => "duplicate-key",
            Code::BadValue => "bad-value",
            Code::DuplicateName => "duplicate-name",
            Code::NoGround => "no-ground",
            Code::NoSupply => "no-supply",
            Code::DanglingNode => "dangling-node",
            Code::Disconnected => "disconnected",
            Code::ShortedElement => "shorted-element",
            Code::MissingCoupling => "missing-coupling",
            Code::UnknownCoupling => "unknown-coupling",
            Code::UnknownDea => "unknown-dea",
            Code::FootSameDea => "foot-same-dea",
            Code::InvalidParameter => "invalid-parameter",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    /// `file:line:col: code: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}: {}",
            file, self.span.line, self.span.column, self.code, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.span.line, self.span.column, self.code, self.message
        )
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| d.severity == Severity::Error)
}
