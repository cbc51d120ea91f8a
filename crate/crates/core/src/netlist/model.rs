use crate::electromech::{DesCurve, MembraneParams};
use crate::locomotion::FootModel;

/// Index into [`CircuitModel::nodes`]; 0 is ground.
pub type NodeId = usize;

pub const GROUND: NodeId = 0;
pub const GROUND_NAME: &str = "gnd";

#[derive(Debug, Clone, PartialEq)]
pub struct Supply {
    pub name: String,
    pub pos: NodeId,
    pub neg: NodeId,
    pub voltage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resistor {
    pub name: String,
    pub a: NodeId,
    pub b: NodeId,
    pub resistance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    pub name: String,
    pub a: NodeId,
    pub b: NodeId,
    pub membrane: MembraneParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Switch {
    pub name: String,
    pub a: NodeId,
    pub b: NodeId,
    pub curve: DesCurve,
    /// Index of the actuator that compresses this switch.
    pub coupled: usize,
}

/// A validated network of supplies, resistors, actuators, switches and feet.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitModel {
    pub nodes: Vec<String>,
    pub supplies: Vec<Supply>,
    pub resistors: Vec<Resistor>,
    pub actuators: Vec<Actuator>,
    pub switches: Vec<Switch>,
    pub feet: Vec<FootModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Supply,
    Resistor,
    Actuator,
    Switch,
}

/// One electrical branch with its element index in the typed lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub kind: BranchKind,
    pub index: usize,
    pub a: NodeId,
    pub b: NodeId,
}

impl CircuitModel {
    pub fn node_index(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn actuator_index(&self, name: &str) -> Option<usize> {
        self.actuators.iter().position(|a| a.name == name)
    }

    pub fn branches(&self) -> Vec<Branch> {
        let mut out = Vec::new();
        for (index, s) in self.supplies.iter().enumerate() {
            out.push(Branch {
                kind: BranchKind::Supply,
                index,
                a: s.pos,
                b: s.neg,
            });
        }
        for (index, r) in self.resistors.iter().enumerate() {
            out.push(Branch {
                kind: BranchKind::Resistor,
                index,
                a: r.a,
                b: r.b,
            });
        }
        for (index, d) in self.actuators.iter().enumerate() {
            out.push(Branch {
                kind: BranchKind::Actuator,
                index,
                a: d.a,
                b: d.b,
            });
        }
        for (index, s) in self.switches.iter().enumerate() {
            out.push(Branch {
                kind: BranchKind::Switch,
                index,
                a: s.a,
                b: s.b,
            });
        }
        out
    }

    /// Switch index -> coupled actuator index.
    pub fn coupling(&self) -> Vec<(usize, usize)> {
        self.switches.iter().enumerate().map(|(i, s)| (i, s.coupled)).collect()
    }

    /// Nodes carrying at least one actuator and not pinned by a supply:
    /// the inverter outputs whose voltages oscillate.
    pub fn signal_nodes(&self) -> Vec<NodeId> {
        let pinned = |n: NodeId| n == GROUND || self.supplies.iter().any(|s| s.pos == n || s.neg == n);
        (1..self.nodes.len())
            .filter(|&n| !pinned(n) && self.actuators.iter().any(|d| d.a == n || d.b == n))
            .collect()
    }

    /// Copy with every supply set to `voltage`.
    pub fn with_supply_voltage(&self, voltage: f64) -> CircuitModel {
        let mut m = self.clone();
        for s in &mut m.supplies {
            s.voltage = voltage;
        }
        m
    }

    /// Copy with every resistor set to `resistance`.
    pub fn with_series_resistance(&self, resistance: f64) -> CircuitModel {
        let mut m = self.clone();
        for r in &mut m.resistors {
            r.resistance = resistance;
        }
        m
    }

    /// The largest supply voltage, used to scale perturbations.
    pub fn supply_voltage(&self) -> f64 {
        self.supplies.iter().map(|s| s.voltage.abs()).fold(0.0, f64::max)
    }

    /// The common resistor value, if all resistors agree.
    pub fn uniform_resistance(&self) -> Option<f64> {
        let first = self.resistors.first()?.resistance;
        self.resistors.iter().all(|r| r.resistance == first).then_some(first)
    }
}
