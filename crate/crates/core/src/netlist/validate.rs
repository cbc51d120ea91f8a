//! Semantic checks that turn an AST into a [`CircuitModel`].
//!
//! Every check runs even after earlier ones fail, so a single pass reports
//! all problems in the file.

use std::collections::HashMap;

use super::ast::{Netlist, Param, ParamValue, Statement, StatementKind};
use super::diagnostics::{Code, Diagnostic, Span};
use super::model::{Actuator, CircuitModel, Resistor, Supply, Switch, GROUND, GROUND_NAME};
use crate::electromech::{DesCurve, MembraneParams, DEFAULT_AREA};
use crate::locomotion::{FootModel, FootParams, Orientation};

struct Overrides<'a> {
    values: HashMap<&'a str, &'a ParamValue>,
}

impl<'a> Overrides<'a> {
    fn get(&self, kind: &str, key: &str) -> Option<&'a ParamValue> {
        self.values.get(format!("{kind}.{key}").as_str()).copied()
    }
}

fn lookup<'a>(params: &'a [Param], overrides: &Overrides<'a>, kind: &str, key: &str) -> Option<&'a ParamValue> {
    params
        .iter()
        .find(|p| p.key == key)
        .map(|p| &p.value)
        .or_else(|| overrides.get(kind, key))
}

fn number(params: &[Param], overrides: &Overrides<'_>, kind: &str, key: &str, default: f64) -> f64 {
    lookup(params, overrides, kind, key)
        .and_then(ParamValue::as_number)
        .unwrap_or(default)
}

fn resolve_membrane(params: &[Param], overrides: &Overrides<'_>) -> MembraneParams {
    let d = MembraneParams::default();
    let mut m = MembraneParams {
        relative_permittivity: number(params, overrides, "dea", "eps_r", d.relative_permittivity),
        vacuum_permittivity: d.vacuum_permittivity,
        unstrained_thickness: number(params, overrides, "dea", "d0", d.unstrained_thickness),
        pre_stretch: number(params, overrides, "dea", "prestretch", d.pre_stretch),
        shear_modulus: number(params, overrides, "dea", "mu", d.shear_modulus),
        viscoelastic_time_constant: number(params, overrides, "dea", "tau", d.viscoelastic_time_constant),
        reference_capacitance: 0.0,
        max_strain: number(params, overrides, "dea", "smax", d.max_strain),
    };
    m.reference_capacitance = match lookup(params, overrides, "dea", "cref").and_then(ParamValue::as_number) {
        Some(c) => c,
        None => m.plate_capacitance(number(params, overrides, "dea", "area", DEFAULT_AREA)),
    };
    m
}

fn resolve_curve(params: &[Param], overrides: &Overrides<'_>) -> DesCurve {
    let d = DesCurve::default();
    DesCurve {
        r_off: number(params, overrides, "des", "roff", d.r_off),
        r_on: number(params, overrides, "des", "ron", d.r_on),
        threshold_actuation: number(params, overrides, "des", "threshold", d.threshold_actuation),
        steepness: number(params, overrides, "des", "steepness", d.steepness),
    }
}

fn resolve_foot(params: &[Param], overrides: &Overrides<'_>) -> Result<FootParams, String> {
    let d = FootParams::default();
    let orientation = match lookup(params, overrides, "foot", "orient") {
        Some(ParamValue::Word(w)) => {
            Orientation::parse(w).ok_or_else(|| format!("orientation must be 'fwd' or 'rev', got '{w}'"))?
        }
        _ => d.orientation,
    };
    Ok(FootParams {
        rest_length: number(params, overrides, "foot", "length", d.rest_length),
        stride_gain: number(params, overrides, "foot", "gain", d.stride_gain),
        engage_strain: number(params, overrides, "foot", "engage", d.engage_strain),
        release_strain: number(params, overrides, "foot", "release", d.release_strain),
        orientation,
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Check structure and parameters; collect every problem before returning.
pub fn validate(ast: &Netlist) -> Result<CircuitModel, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let first_span = ast.statements.first().map_or(Span::new(1, 1, 2), |s| s.span);

    // global overrides
    let mut overrides = Overrides { values: HashMap::new() };
    for st in &ast.statements {
        if let StatementKind::Param { params } = &st.kind {
            for p in params {
                if overrides.values.insert(p.key.as_str(), &p.value).is_some() {
                    diags.push(Diagnostic::error(
                        Code::DuplicateKey,
                        p.span,
                        format!("override '{}' given more than once", p.key),
                    ));
                }
            }
        }
    }

    // unique names per kind
    let mut seen: HashMap<(&str, &str), usize> = HashMap::new();
    for st in &ast.statements {
        if let Some(name) = st.kind.name() {
            let key = (st.kind.keyword(), name);
            if let Some(line) = seen.get(&key) {
                diags.push(Diagnostic::error(
                    Code::DuplicateName,
                    st.arg_span(0),
                    format!("{} '{name}' already defined on line {line}", st.kind.keyword()),
                ));
            } else {
                seen.insert(key, st.span.line);
            }
        }
    }

    // node table, ground first
    let mut nodes: Vec<String> = vec![GROUND_NAME.to_string()];
    let mut node_ref: Vec<Option<Span>> = vec![None];
    let node_of = |name: &str, span: Span, nodes: &mut Vec<String>, node_ref: &mut Vec<Option<Span>>| {
        let idx = match nodes.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                nodes.push(name.to_string());
                node_ref.push(None);
                nodes.len() - 1
            }
        };
        node_ref[idx].get_or_insert(span);
        idx
    };
    let mut terminals: Vec<(usize, usize, &Statement)> = Vec::new();
    for st in &ast.statements {
        if let Some((a, b)) = st.kind.terminals() {
            let ia = node_of(a, st.arg_span(1), &mut nodes, &mut node_ref);
            let ib = node_of(b, st.arg_span(2), &mut nodes, &mut node_ref);
            if ia == ib {
                diags.push(Diagnostic::error(
                    Code::ShortedElement,
                    st.arg_span(2),
                    format!(
                        "both terminals of '{}' are on node '{a}'",
                        st.kind.name().unwrap_or("?")
                    ),
                ));
            }
            terminals.push((ia, ib, st));
        }
    }
    let incident = {
        let mut counts = vec![0usize; nodes.len()];
        for (a, b, _) in &terminals {
            counts[*a] += 1;
            counts[*b] += 1;
        }
        counts
    };

    let dea_names: Vec<&str> = ast
        .statements
        .iter()
        .filter_map(|s| match &s.kind {
            StatementKind::Dea { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    let dea_index = |name: &str| dea_names.iter().position(|n| *n == name);

    let mut supplies = Vec::new();
    let mut resistors = Vec::new();
    let mut actuators = Vec::new();
    let mut switches = Vec::new();
    let mut feet = Vec::new();
    let node_id = |name: &str| nodes.iter().position(|n| n == name).unwrap_or(GROUND);

    for st in &ast.statements {
        match &st.kind {
            StatementKind::Supply {
                name,
                pos,
                neg,
                voltage,
            } => {
                if !(voltage.is_finite() && *voltage >= 0.0) {
                    diags.push(Diagnostic::error(
                        Code::InvalidParameter,
                        st.arg_span(3),
                        format!("supply '{name}' voltage must be >= 0, got {voltage}"),
                    ));
                }
                supplies.push(Supply {
                    name: name.clone(),
                    pos: node_id(pos),
                    neg: node_id(neg),
                    voltage: *voltage,
                });
            }
            StatementKind::Resistor { name, a, b, resistance } => {
                if !(resistance.is_finite() && *resistance > 0.0) {
                    diags.push(Diagnostic::error(
                        Code::InvalidParameter,
                        st.arg_span(3),
                        format!("resistor '{name}' must have positive resistance, got {resistance}"),
                    ));
                }
                resistors.push(Resistor {
                    name: name.clone(),
                    a: node_id(a),
                    b: node_id(b),
                    resistance: *resistance,
                });
            }
            StatementKind::Dea { name, a, b, params } => {
                let membrane = resolve_membrane(params, &overrides);
                if let Err(e) = membrane.validate() {
                    diags.push(Diagnostic::error(
                        Code::InvalidParameter,
                        st.arg_span(0),
                        format!("dea '{name}': {e}"),
                    ));
                }
                actuators.push(Actuator {
                    name: name.clone(),
                    a: node_id(a),
                    b: node_id(b),
                    membrane,
                });
            }
            StatementKind::Des { name, a, b, params } => {
                let curve = resolve_curve(params, &overrides);
                if let Err(e) = curve.validate() {
                    diags.push(Diagnostic::error(
                        Code::InvalidParameter,
                        st.arg_span(0),
                        format!("des '{name}': {e}"),
                    ));
                }
                let coupled = match params.iter().find(|p| p.key == "coupled") {
                    None => {
                        diags.push(Diagnostic::error(
                            Code::MissingCoupling,
                            st.arg_span(0),
                            format!("des '{name}' needs coupled=<dea>"),
                        ));
                        None
                    }
                    Some(p) => match &p.value {
                        ParamValue::Word(target) => match dea_index(target) {
                            Some(i) => Some(i),
                            None => {
                                diags.push(Diagnostic::error(
                                    Code::UnknownCoupling,
                                    p.span,
                                    format!("unknown coupling target '{target}' for des '{name}'"),
                                ));
                                None
                            }
                        },
                        ParamValue::Number(_) => None,
                    },
                };
                switches.push(Switch {
                    name: name.clone(),
                    a: node_id(a),
                    b: node_id(b),
                    curve,
                    coupled: coupled.unwrap_or(usize::MAX),
                });
            }
            StatementKind::Foot {
                name,
                left,
                right,
                params,
            } => {
                let mut ok = true;
                let mut ends = [0usize; 2];
                for (slot, (dea, arg)) in [(left, 1), (right, 2)].into_iter().enumerate() {
                    match dea_index(dea) {
                        Some(i) => ends[slot] = i,
                        None => {
                            ok = false;
                            diags.push(Diagnostic::error(
                                Code::UnknownDea,
                                st.arg_span(arg),
                                format!("foot '{name}' references unknown dea '{dea}'"),
                            ));
                        }
                    }
                }
                if left == right {
                    ok = false;
                    diags.push(Diagnostic::error(
                        Code::FootSameDea,
                        st.arg_span(2),
                        format!("foot '{name}' must join two different actuators, got '{left}' twice"),
                    ));
                }
                let foot_params = match resolve_foot(params, &overrides) {
                    Ok(p) => p,
                    Err(msg) => {
                        ok = false;
                        diags.push(Diagnostic::error(Code::BadValue, st.param_span("orient"), msg));
                        FootParams::default()
                    }
                };
                if let Err(e) = foot_params.validate() {
                    ok = false;
                    diags.push(Diagnostic::error(
                        Code::InvalidParameter,
                        st.arg_span(0),
                        format!("foot '{name}': {e}"),
                    ));
                }
                if ok {
                    feet.push(FootModel {
                        name: name.clone(),
                        left: ends[0],
                        right: ends[1],
                        params: foot_params,
                    });
                }
            }
            StatementKind::Param { .. } => {}
        }
    }

    if supplies.is_empty() {
        diags.push(Diagnostic::error(Code::NoSupply, first_span, "netlist has no supply"));
    }

    // topology
    let grounded = node_ref[GROUND].is_some();
    if !grounded && !terminals.is_empty() {
        diags.push(Diagnostic::error(
            Code::NoGround,
            first_span,
            format!("no ground node: no element connects to '{GROUND_NAME}'"),
        ));
    }
    let mut uf = UnionFind::new(nodes.len());
    for (a, b, _) in &terminals {
        uf.union(*a, *b);
    }
    if grounded {
        let mut reported = Vec::new();
        for n in 1..nodes.len() {
            let root = uf.find(n);
            if root != uf.find(GROUND) && !reported.contains(&root) {
                reported.push(root);
                diags.push(Diagnostic::error(
                    Code::Disconnected,
                    node_ref[n].unwrap_or(first_span),
                    format!("node '{}' has no path to '{GROUND_NAME}'", nodes[n]),
                ));
            }
        }
    }
    for n in 1..nodes.len() {
        if incident[n] < 2 {
            diags.push(Diagnostic::error(
                Code::DanglingNode,
                node_ref[n].unwrap_or(first_span),
                format!("node '{}' has only one connection", nodes[n]),
            ));
        }
    }

    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.span.line, d.span.column));
        return Err(diags);
    }
    Ok(CircuitModel {
        nodes,
        supplies,
        resistors,
        actuators,
        switches,
        feet,
    })
}
