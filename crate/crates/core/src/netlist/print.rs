use std::fmt::Write;

use super::ast::{Netlist, Param, ParamValue, StatementKind};
use super::units::format_value;

fn push_params(out: &mut String, params: &[Param]) {
    for p in params {
        let value = match &p.value {
            ParamValue::Number(v) => format_value(*v),
            ParamValue::Word(w) => w.clone(),
        };
        let _ = write!(out, " {}={}", p.key, value);
    }
}

/// Deterministic canonical text: lower-case keywords, single spaces,
/// engineering values without unit letters, no comments.
pub fn print_canonical(netlist: &Netlist) -> String {
    let mut out = String::new();
    for statement in &netlist.statements {
        let kind = &statement.kind;
        out.push_str(kind.keyword());
        match kind {
            StatementKind::Supply {
                name,
                pos,
                neg,
                voltage,
            } => {
                let _ = write!(out, " {name} {pos} {neg} {}", format_value(*voltage));
            }
            StatementKind::Resistor { name, a, b, resistance } => {
                let _ = write!(out, " {name} {a} {b} {}", format_value(*resistance));
            }
            StatementKind::Dea { name, a, b, params } | StatementKind::Des { name, a, b, params } => {
                let _ = write!(out, " {name} {a} {b}");
                push_params(&mut out, params);
            }
            StatementKind::Foot {
                name,
                left,
                right,
                params,
            } => {
                let _ = write!(out, " {name} {left} {right}");
                push_params(&mut out, params);
            }
            StatementKind::Param { params } => push_params(&mut out, params),
        }
        out.push('\n');
    }
    out
}
