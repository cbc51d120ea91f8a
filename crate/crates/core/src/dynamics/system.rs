//! Charge/strain right-hand side with a modified nodal analysis solve per
//! evaluation.
//!
//! Actuators sharing a node pair are merged into one capacitor group, which
//! enters the nodal system as a voltage source `V = sum(Q) / sum(C)`.
//! Supplies are voltage sources too. Resistors and switches are
//! conductances, scaled by a reference resistance to keep the matrix
//! well conditioned.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{DMatrix, DVector};

use super::DynamicsError;
use crate::electromech::{capacitance_slope, capacitance_unchecked, Membrane};
use crate::netlist::{CircuitModel, NodeId, GROUND};

#[derive(Debug, Clone)]
struct Group {
    a: NodeId,
    b: NodeId,
    /// (actuator index, +1 or -1 relative to the group orientation)
    members: Vec<(usize, f64)>,
}

/// Everything derived from one state vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Node voltages, ground included at index 0.
    pub node_voltages: Vec<f64>,
    /// Switch resistances, ohm.
    pub switch_resistances: Vec<f64>,
    /// Charging current of each actuator group, A.
    pub group_currents: Vec<f64>,
    /// Time derivative of the state.
    pub rates: Vec<f64>,
}

/// The assembled, immutable ODE system of a circuit.
#[derive(Debug)]
pub struct OdeSystem {
    model: CircuitModel,
    membranes: Vec<Membrane>,
    groups: Vec<Group>,
    r_ref: f64,
    freeze_mechanics: bool,
    clamp_warned: AtomicBool,
}

struct Forest {
    parent: Vec<usize>,
}

impl Forest {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Nodes on the path between `from` and `to` through the given edges.
fn path_nodes(edges: &[(NodeId, NodeId)], from: NodeId, to: NodeId, n: usize) -> Vec<NodeId> {
    let mut prev = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == u && prev[y] == usize::MAX {
                    prev[y] = u;
                    queue.push_back(y);
                }
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from && prev[cur] != usize::MAX {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// Build the ODE system. Fails if voltage sources (supplies and capacitor
/// groups) form a loop, or if some node has no path to ground.
pub fn assemble(model: &CircuitModel) -> Result<OdeSystem, DynamicsError> {
    let n = model.nodes.len();
    let mut membranes = Vec::with_capacity(model.actuators.len());
    for d in &model.actuators {
        membranes.push(
            Membrane::new(d.membrane).map_err(|source| DynamicsError::InvalidActuator {
                name: d.name.clone(),
                source,
            })?,
        );
    }
    for s in &model.switches {
        if s.coupled >= model.actuators.len() {
            return Err(DynamicsError::UnknownCoupling { switch: s.name.clone() });
        }
    }

    let mut by_pair: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (i, d) in model.actuators.iter().enumerate() {
        let key = (d.a.min(d.b), d.a.max(d.b));
        match by_pair.get(&key) {
            Some(&g) => {
                let sign = if groups[g].a == d.a { 1.0 } else { -1.0 };
                groups[g].members.push((i, sign));
            }
            None => {
                by_pair.insert(key, groups.len());
                groups.push(Group {
                    a: d.a,
                    b: d.b,
                    members: vec![(i, 1.0)],
                });
            }
        }
    }

    // Voltage-source loops make the nodal matrix singular.
    let mut forest = Forest {
        parent: (0..n).collect(),
    };
    let mut tree: Vec<(NodeId, NodeId)> = Vec::new();
    let sources = model
        .supplies
        .iter()
        .map(|s| (s.name.clone(), s.pos, s.neg))
        .chain(groups.iter().map(|g| {
            let names: Vec<&str> = g
                .members
                .iter()
                .map(|&(i, _)| model.actuators[i].name.as_str())
                .collect();
            (names.join("+"), g.a, g.b)
        }));
    for (name, a, b) in sources {
        let (ra, rb) = (forest.find(a), forest.find(b));
        if ra == rb {
            let mut nodes: Vec<String> = path_nodes(&tree, a, b, n)
                .into_iter()
                .map(|k| model.nodes[k].clone())
                .collect();
            nodes.dedup();
            return Err(DynamicsError::SourceLoop { element: name, nodes });
        }
        forest.parent[ra] = rb;
        tree.push((a, b));
    }

    // Every node must reach ground.
    let mut all = Forest {
        parent: (0..n).collect(),
    };
    for br in model.branches() {
        let (ra, rb) = (all.find(br.a), all.find(br.b));
        if ra != rb {
            all.parent[ra] = rb;
        }
    }
    let ground_root = all.find(GROUND);
    let floating: Vec<String> = (0..n)
        .filter(|&k| all.find(k) != ground_root)
        .map(|k| model.nodes[k].clone())
        .collect();
    if !floating.is_empty() {
        return Err(DynamicsError::Floating { nodes: floating });
    }

    let r_ref = model
        .resistors
        .iter()
        .map(|r| r.resistance)
        .chain(model.switches.iter().map(|s| s.curve.r_on))
        .fold(f64::NAN, f64::min);
    Ok(OdeSystem {
        model: model.clone(),
        membranes,
        groups,
        r_ref: if r_ref.is_finite() && r_ref > 0.0 { r_ref } else { 1.0 },
        freeze_mechanics: false,
        clamp_warned: AtomicBool::new(false),
    })
}

impl OdeSystem {
    /// Hold strains (and so capacitances and switch resistances) fixed.
    pub fn with_frozen_mechanics(mut self, freeze: bool) -> Self {
        self.freeze_mechanics = freeze;
        self
    }

    pub fn model(&self) -> &CircuitModel {
        &self.model
    }

    /// Charges first, then strains.
    pub fn dimension(&self) -> usize {
        2 * self.model.actuators.len()
    }

    pub fn actuator_count(&self) -> usize {
        self.model.actuators.len()
    }

    fn capacitances(&self, strains: &[f64]) -> Vec<f64> {
        self.membranes
            .iter()
            .zip(strains)
            .map(|(m, &s)| capacitance_unchecked(s, m.params().reference_capacitance))
            .collect()
    }

    fn group_voltage(&self, g: &Group, charges: &[f64], caps: &[f64]) -> f64 {
        let q: f64 = g.members.iter().map(|&(i, sign)| sign * charges[i]).sum();
        let c: f64 = g.members.iter().map(|&(i, _)| caps[i]).sum();
        q / c
    }

    /// Redistribute charge inside each group so every member sits at the
    /// group voltage. Total group charge is preserved.
    pub fn project(&self, state: &mut [f64]) {
        let m = self.actuator_count();
        let (charges, strains) = state.split_at_mut(m);
        let caps = self.capacitances(strains);
        for g in &self.groups {
            let v = self.group_voltage(g, charges, &caps);
            for &(i, sign) in &g.members {
                charges[i] = sign * caps[i] * v;
            }
        }
    }

    /// Voltage across each actuator (terminal a minus terminal b).
    pub fn actuator_voltages(&self, state: &[f64]) -> Vec<f64> {
        let m = self.actuator_count();
        let caps = self.capacitances(&state[m..]);
        let mut out = vec![0.0; m];
        for g in &self.groups {
            let v = self.group_voltage(g, &state[..m], &caps);
            for &(i, sign) in &g.members {
                out[i] = sign * v;
            }
        }
        out
    }

    /// Solve the network and form the state derivative.
    pub fn evaluate(&self, state: &[f64]) -> Result<Evaluation, DynamicsError> {
        let model = &self.model;
        let m = self.actuator_count();
        let (charges, strains) = state.split_at(m);
        let caps = self.capacitances(strains);

        let group_v: Vec<f64> = self
            .groups
            .iter()
            .map(|g| self.group_voltage(g, charges, &caps))
            .collect();

        let mut strain_rates = vec![0.0; m];
        if !self.freeze_mechanics {
            for (g, &v) in self.groups.iter().zip(&group_v) {
                for &(i, _) in &g.members {
                    let membrane = &self.membranes[i];
                    let (target, clamped) = membrane.equilibrium_strain_clamped(v.abs());
                    if clamped && !self.clamp_warned.swap(true, Ordering::Relaxed) {
                        log::warn!(
                            "actuator {} driven past pull-in at {:.1} V; strain clamped at {}",
                            model.actuators[i].name,
                            v.abs(),
                            membrane.params().max_strain
                        );
                    }
                    strain_rates[i] = (target - strains[i]) / membrane.params().viscoelastic_time_constant;
                }
            }
        }

        let switch_resistances: Vec<f64> = model
            .switches
            .iter()
            .map(|s| s.curve.resistance_unchecked(strains[s.coupled]))
            .collect();

        // Unknowns: node voltages 1..n, then one current per source.
        let n_v = model.nodes.len() - 1;
        let n_src = model.supplies.len() + self.groups.len();
        let dim = n_v + n_src;
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        let mut stamp_g = |p: NodeId, q: NodeId, g: f64| {
            if p != GROUND {
                a[(p - 1, p - 1)] += g;
            }
            if q != GROUND {
                a[(q - 1, q - 1)] += g;
            }
            if p != GROUND && q != GROUND {
                a[(p - 1, q - 1)] -= g;
                a[(q - 1, p - 1)] -= g;
            }
        };
        for r in &model.resistors {
            stamp_g(r.a, r.b, self.r_ref / r.resistance);
        }
        for (s, &r) in model.switches.iter().zip(&switch_resistances) {
            stamp_g(s.a, s.b, self.r_ref / r);
        }
        let sources = model
            .supplies
            .iter()
            .map(|s| (s.pos, s.neg, s.voltage))
            .chain(self.groups.iter().zip(&group_v).map(|(g, &v)| (g.a, g.b, v)));
        for (k, (p, q, v)) in sources.enumerate() {
            let col = n_v + k;
            if p != GROUND {
                a[(p - 1, col)] += 1.0;
                a[(col, p - 1)] += 1.0;
            }
            if q != GROUND {
                a[(q - 1, col)] -= 1.0;
                a[(col, q - 1)] -= 1.0;
            }
            rhs[col] = v;
        }
        let x = a.lu().solve(&rhs).ok_or(DynamicsError::SingularNetwork)?;

        let mut node_voltages = vec![0.0; model.nodes.len()];
        for k in 0..n_v {
            node_voltages[k + 1] = x[k];
        }
        let first_group = n_v + model.supplies.len();
        let group_currents: Vec<f64> = (0..self.groups.len())
            .map(|g| x[first_group + g] / self.r_ref)
            .collect();

        let mut rates = vec![0.0; 2 * m];
        for (g_idx, g) in self.groups.iter().enumerate() {
            let v = group_v[g_idx];
            let total_c: f64 = g.members.iter().map(|&(i, _)| caps[i]).sum();
            let displacement: f64 = g
                .members
                .iter()
                .map(|&(i, _)| {
                    capacitance_slope(strains[i], self.membranes[i].params().reference_capacitance)
                        * strain_rates[i]
                        * v
                })
                .sum();
            let dv = (group_currents[g_idx] - displacement) / total_c;
            for &(i, sign) in &g.members {
                let slope = capacitance_slope(strains[i], self.membranes[i].params().reference_capacitance);
                rates[i] = sign * (slope * strain_rates[i] * v + caps[i] * dv);
            }
        }
        rates[m..].copy_from_slice(&strain_rates);

        Ok(Evaluation {
            node_voltages,
            switch_resistances,
            group_currents,
            rates,
        })
    }

    /// State derivative only.
    pub fn rates(&self, state: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        Ok(self.evaluate(state)?.rates)
    }

    /// Largest Kirchhoff current-law mismatch over nodes not pinned by a
    /// supply, using branch currents recomputed from the node voltages and
    /// the actuator charge rates, A.
    pub fn kcl_residual(&self, eval: &Evaluation) -> f64 {
        let model = &self.model;
        let v = &eval.node_voltages;
        let mut net = vec![0.0; model.nodes.len()];
        for r in &model.resistors {
            let i = (v[r.a] - v[r.b]) / r.resistance;
            net[r.a] -= i;
            net[r.b] += i;
        }
        for (s, &r) in model.switches.iter().zip(&eval.switch_resistances) {
            let i = (v[s.a] - v[s.b]) / r;
            net[s.a] -= i;
            net[s.b] += i;
        }
        for (i, d) in model.actuators.iter().enumerate() {
            let i_cap = eval.rates[i];
            net[d.a] -= i_cap;
            net[d.b] += i_cap;
        }
        let pinned = |k: NodeId| k == GROUND || model.supplies.iter().any(|s| s.pos == k || s.neg == k);
        (0..model.nodes.len())
            .filter(|&k| !pinned(k))
            .map(|k| net[k].abs())
            .fold(0.0, f64::max)
    }
}
