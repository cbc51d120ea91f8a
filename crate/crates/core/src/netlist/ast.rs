use super::diagnostics::Span;
use super::units::Unit;

/// Parsed netlist: statements in source order.
#[derive(Debug, Clone, Default)]
pub struct Netlist {
    pub statements: Vec<Statement>,
}

impl Netlist {
    /// Equality of statement content, ignoring source locations.
    pub fn structurally_eq(&self, other: &Netlist) -> bool {
        self.statements.len() == other.statements.len()
            && self
                .statements
                .iter()
                .zip(&other.statements)
                .all(|(a, b)| a.kind == b.kind)
    }
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: StatementKind,
    /// Whole statement, from keyword to last token.
    pub span: Span,
    /// Spans of the keyword followed by each positional token.
    pub token_spans: Vec<Span>,
}

impl Statement {
    /// Span of positional token `index` (0 is the element name).
    pub fn arg_span(&self, index: usize) -> Span {
        self.token_spans.get(index + 1).copied().unwrap_or(self.span)
    }

    pub fn param_span(&self, key: &str) -> Span {
        self.kind
            .params()
            .iter()
            .find(|p| p.key == key)
            .map(|p| p.span)
            .unwrap_or(self.span)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    Supply {
        name: String,
        pos: String,
        neg: String,
        voltage: f64,
    },
    Resistor {
        name: String,
        a: String,
        b: String,
        resistance: f64,
    },
    Dea {
        name: String,
        a: String,
        b: String,
        params: Vec<Param>,
    },
    Des {
        name: String,
        a: String,
        b: String,
        params: Vec<Param>,
    },
    Foot {
        name: String,
        left: String,
        right: String,
        params: Vec<Param>,
    },
    /// Global default overrides, keys of the form `dea.tau`.
    Param { params: Vec<Param> },
}

impl StatementKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            StatementKind::Supply { .. } => "supply",
            StatementKind::Resistor { .. } => "resistor",
            StatementKind::Dea { .. } => "dea",
            StatementKind::Des { .. } => "des",
            StatementKind::Foot { .. } => "foot",
            StatementKind::Param { .. } => "param",
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            StatementKind::Supply { name, .. }
            | StatementKind::Resistor { name, .. }
            | StatementKind::Dea { name, .. }
            | StatementKind::Des { name, .. }
            | StatementKind::Foot { name, .. } => Some(name),
            StatementKind::Param { .. } => None,
        }
    }

    pub fn params(&self) -> &[Param] {
        match self {
            StatementKind::Dea { params, .. }
            | StatementKind::Des { params, .. }
            | StatementKind::Foot { params, .. }
            | StatementKind::Param { params } => params,
            _ => &[],
        }
    }

    /// Electrical terminals, if this statement is a branch.
    pub fn terminals(&self) -> Option<(&str, &str)> {
        match self {
            StatementKind::Supply { pos, neg, .. } => Some((pos, neg)),
            StatementKind::Resistor { a, b, .. }
            | StatementKind::Dea { a, b, .. }
            | StatementKind::Des { a, b, .. } => Some((a, b)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Param {
    pub key: String,
    pub value: ParamValue,
    pub span: Span,
}

// locations are not part of a parameter's identity
impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.value == other.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Word(String),
}

impl ParamValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(*v),
            ParamValue::Word(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Number(Option<Unit>),
    Word,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: ValueKind,
    pub help: &'static str,
}

const fn num(name: &'static str, unit: Option<Unit>, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind: ValueKind::Number(unit),
        help,
    }
}

pub const DEA_KEYS: &[KeySpec] = &[
    num("cref", Some(Unit::Farad), "capacitance at rest, overrides area"),
    num("area", None, "pre-stretched electrode area, m^2"),
    num("eps_r", None, "relative permittivity"),
    num("d0", None, "unstretched membrane thickness, m"),
    num("prestretch", None, "equibiaxial pre-stretch ratio"),
    num("mu", None, "effective shear modulus, Pa"),
    num("tau", Some(Unit::Second), "viscoelastic time constant"),
    num("smax", None, "actuation strain bound"),
];

pub const DES_KEYS: &[KeySpec] = &[
    KeySpec {
        name: "coupled",
        kind: ValueKind::Word,
        help: "actuator that compresses this switch",
    },
    num("ron", Some(Unit::Ohm), "conducting resistance"),
    num("roff", Some(Unit::Ohm), "insulating resistance"),
    num("threshold", None, "actuation strain at the log-resistance midpoint"),
    num("steepness", None, "logistic sharpness"),
];

pub const FOOT_KEYS: &[KeySpec] = &[
    num("length", None, "segment rest length, m"),
    num("gain", None, "stride gain in (0, 1]"),
    num("engage", None, "lift-off strain threshold"),
    num("release", None, "re-plant strain threshold"),
    KeySpec {
        name: "orient",
        kind: ValueKind::Word,
        help: "walking direction: fwd (trailing actuator on the left) or rev",
    },
];

pub fn keys_for(keyword: &str) -> Option<&'static [KeySpec]> {
    match keyword {
        "dea" => Some(DEA_KEYS),
        "des" => Some(DES_KEYS),
        "foot" => Some(FOOT_KEYS),
        _ => None,
    }
}
