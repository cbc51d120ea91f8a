//! Netlist DSL: parsing, canonical printing and semantic validation.

mod ast;
mod diagnostics;
mod model;
mod parser;
mod print;
pub mod units;
mod validate;

pub use ast::{keys_for, KeySpec, Netlist, Param, ParamValue, Statement, StatementKind, ValueKind};
pub use diagnostics::{has_errors, Code, Diagnostic, Severity, Span};
pub use model::{Actuator, Branch, BranchKind, CircuitModel, NodeId, Resistor, Supply, Switch, GROUND, GROUND_NAME};
pub use parser::{parse, parse_bytes};
pub use print::print_canonical;
pub use validate::validate;

/// Source of the bundled three-inverter crawling robot.
pub const TREVOR_NET: &str = include_str!("../../../../assets/trevor.net");

/// Parse and validate in one go.
pub fn from_text(text: &str) -> Result<CircuitModel, Vec<Diagnostic>> {
    validate(&parse(text)?)
}

/// Parse and validate raw bytes (invalid UTF-8 is reported, not fatal to parsing).
pub fn from_bytes(bytes: &[u8]) -> Result<CircuitModel, Vec<Diagnostic>> {
    validate(&parse_bytes(bytes)?)
}

/// The bundled robot.
pub fn trevor() -> CircuitModel {
    from_text(TREVOR_NET).expect("bundled netlist is valid")
}

/// Netlist text for a ring of `stages` inverters built like the bundled
/// robot (two actuators per stage, one switch pulling down the next stage),
/// without feet.
pub fn ring_netlist(stages: usize, supply_voltage: f64, series_resistance: f64) -> String {
    use std::fmt::Write;
    let mut out = format!("supply VS vs_rail gnd {}\n", units::format_value(supply_voltage));
    for k in 1..=stages {
        let _ = writeln!(
            out,
            "resistor RS{k} vs_rail n{k} {}",
            units::format_value(series_resistance)
        );
        let _ = writeln!(out, "dea DEA{k} n{k} gnd");
        let _ = writeln!(out, "dea DEA{k}p n{k} gnd");
    }
    for k in 1..=stages {
        let next = k % stages + 1;
        let _ = writeln!(out, "des DES{k} n{next} gnd coupled=DEA{k}");
    }
    out
}
