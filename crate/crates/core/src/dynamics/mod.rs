//! Coupled charge/strain dynamics of a circuit and its time integration.

mod rodas;
mod system;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use system::{assemble, Evaluation, OdeSystem};
pub use trace::{Trace, TraceCsvError};

use crate::electromech::{ElectromechError, Membrane};
use crate::netlist::CircuitModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("voltage sources form a loop through nodes {nodes:?} (closed by '{element}'); add a resistive path")]
    SourceLoop { element: String, nodes: Vec<String> },
    #[error("floating nodes with no path to ground: {nodes:?}")]
    Floating { nodes: Vec<String> },
    #[error("switch '{switch}' is not coupled to an existing actuator")]
    UnknownCoupling { switch: String },
    #[error("actuator '{name}': {source}")]
    InvalidActuator { name: String, source: ElectromechError },
    #[error("singular nodal matrix")]
    SingularNetwork,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid initial perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("step size underflow at t = {time} s (h = {step:e} s), state {state:?}")]
    StepUnderflow { time: f64, step: f64, state: Vec<f64> },
    #[error("non-finite value at t = {time} s, state {state:?}")]
    NonFinite { time: f64, state: Vec<f64> },
    #[error("step limit of {steps} reached at t = {time} s")]
    TooManySteps { time: f64, steps: usize },
}

/// Per-actuator state: charge (C) and actuation strain.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub charges: Vec<f64>,
    pub strains: Vec<f64>,
}

impl SimState {
    pub fn rest(actuators: usize) -> Self {
        SimState {
            time: 0.0,
            charges: vec![0.0; actuators],
            strains: vec![0.0; actuators],
        }
    }

    /// Charges followed by strains.
    pub fn to_vector(&self) -> Vec<f64> {
        self.charges.iter().chain(&self.strains).copied().collect()
    }

    pub fn from_vector(time: f64, y: &[f64]) -> Self {
        let m = y.len() / 2;
        SimState {
            time,
            charges: y[..m].to_vec(),
            strains: y[m..].to_vec(),
        }
    }
}

/// How the rest state is disturbed so the ring can start.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// No disturbance.
    None,
    /// Charge `fraction * C_ref * V_S` on one actuator.
    Single { actuator: usize, fraction: f64 },
    /// Absolute per-actuator charge offsets, C.
    Charges(Vec<f64>),
    /// Each actuator gets a uniform random charge in
    /// `[0, amplitude * C_ref * V_S)` from a seeded generator.
    Jitter { seed: u64, amplitude: f64 },
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation::Single {
            actuator: 0,
            fraction: 0.01,
        }
    }
}

/// Rest state plus the requested perturbation. Charges must stay
/// non-negative and below the pull-in charge at rest capacitance.
pub fn initial_state(model: &CircuitModel, perturbation: &Perturbation) -> Result<SimState, DynamicsError> {
    let m = model.actuators.len();
    let mut state = SimState::rest(m);
    let vs = model.supply_voltage();
    let scale = |i: usize| model.actuators[i].membrane.reference_capacitance * vs;
    match perturbation {
        Perturbation::None => {}
        Perturbation::Single { actuator, fraction } => {
            if *actuator >= m {
                return Err(DynamicsError::InvalidPerturbation(format!(
                    "actuator index {actuator} out of range ({m} actuators)"
                )));
            }
            state.charges[*actuator] = fraction * scale(*actuator);
        }
        Perturbation::Charges(q) => {
            if q.len() != m {
                return Err(DynamicsError::InvalidPerturbation(format!(
                    "{} charge offsets for {m} actuators",
                    q.len()
                )));
            }
            state.charges.copy_from_slice(q);
        }
        Perturbation::Jitter { seed, amplitude } => {
            if !(amplitude.is_finite() && *amplitude >= 0.0) {
                return Err(DynamicsError::InvalidPerturbation(format!(
                    "jitter amplitude {amplitude}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for i in 0..m {
                state.charges[i] = amplitude * scale(i) * rng.random::<f64>();
            }
        }
    }
    for (i, &q) in state.charges.iter().enumerate() {
        let params = &model.actuators[i].membrane;
        let limit = params.reference_capacitance
            * Membrane::new(*params)
                .map_err(|source| DynamicsError::InvalidActuator {
                    name: model.actuators[i].name.clone(),
                    source,
                })?
                .pull_in_voltage();
        if !(q.is_finite() && q >= 0.0 && q <= limit) {
            return Err(DynamicsError::InvalidPerturbation(format!(
                "charge {q} C on '{}' outside [0, {limit}] C",
                model.actuators[i].name
            )));
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    /// Absolute tolerance on charges, C.
    pub atol_charge: f64,
    /// Absolute tolerance on strains.
    pub atol_strain: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub sample_interval: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub perturbation: Perturbation,
    /// Hold strains at their initial values.
    pub freeze_mechanics: bool,
    /// Evaluate the current-law residual after every accepted step.
    pub check_kcl: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-6,
            atol_charge: 1e-13,
            atol_strain: 1e-9,
            max_step: 0.01,
            initial_step: 1e-5,
            sample_interval: 1e-3,
            t_end: 30.0,
            max_steps: 50_000_000,
            perturbation: Perturbation::default(),
            freeze_mechanics: false,
            check_kcl: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [
            ("rtol", self.rtol),
            ("atol_charge", self.atol_charge),
            ("atol_strain", self.atol_strain),
            ("max_step", self.max_step),
            ("initial_step", self.initial_step),
            ("sample_interval", self.sample_interval),
            ("t_end", self.t_end),
        ];
        for (what, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!(
                    "{what} must be positive, got {v}"
                )));
            }
        }
        if self.sample_interval > self.t_end {
            return Err(DynamicsError::InvalidConfig(format!(
                "sample interval {} exceeds t_end {}",
                self.sample_interval, self.t_end
            )));
        }
        Ok(())
    }
}

/// Solver bookkeeping for one integration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub jacobians: usize,
    /// Largest current-law mismatch seen, A (zero unless checked).
    pub max_kcl_residual: f64,
    /// Largest `residual * h` over accepted steps, C.
    pub max_kcl_charge: f64,
    /// Sum of absolute local error estimates per state component.
    pub error_estimate: Vec<f64>,
    /// Largest |dy/dt| seen per component at accepted steps.
    pub peak_rates: Vec<f64>,
    pub final_state: Vec<f64>,
}

/// Trace plus solver statistics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub trace: Trace,
    pub stats: IntegrationStats,
}

/// Integrate from the perturbed rest state described by the config.
pub fn integrate(system: &OdeSystem, config: &SolverConfig) -> Result<Solution, DynamicsError> {
    let state = initial_state(system.model(), &config.perturbation)?;
    integrate_from(system, &state, config)
}

/// Integrate from an explicit state. Charges are first redistributed inside
/// each parallel group so members share one voltage.
pub fn integrate_from(system: &OdeSystem, state: &SimState, config: &SolverConfig) -> Result<Solution, DynamicsError> {
    config.validate()?;
    let m = system.actuator_count();
    if state.charges.len() != m || state.strains.len() != m {
        return Err(DynamicsError::InvalidPerturbation(format!(
            "state has {} charges and {} strains for {m} actuators",
            state.charges.len(),
            state.strains.len()
        )));
    }
    let mut y0 = state.to_vector();
    system.project(&mut y0);

    let model = system.model();
    let frozen;
    let system = if config.freeze_mechanics {
        frozen = assemble(model)?.with_frozen_mechanics(true);
        &frozen
    } else {
        system
    };

    let n_samples = (config.t_end / config.sample_interval).round() as usize + 1;
    let node_names: Vec<String> = model.nodes[1..].to_vec();
    let mut trace = Trace {
        times: Vec::with_capacity(n_samples),
        node_names,
        voltages: vec![Vec::with_capacity(n_samples); model.nodes.len() - 1],
        dea_names: model.actuators.iter().map(|a| a.name.clone()).collect(),
        strains: vec![Vec::with_capacity(n_samples); m],
        des_names: model.switches.iter().map(|s| s.name.clone()).collect(),
        resistances: vec![Vec::with_capacity(n_samples); model.switches.len()],
    };
    let record = |trace: &mut Trace, t: f64, y: &[f64]| -> Result<(), DynamicsError> {
        let ev = system.evaluate(y)?;
        trace.times.push(t);
        for (k, series) in trace.voltages.iter_mut().enumerate() {
            series.push(ev.node_voltages[k + 1]);
        }
        for (i, series) in trace.strains.iter_mut().enumerate() {
            series.push(y[m + i]);
        }
        for (i, series) in trace.resistances.iter_mut().enumerate() {
            series.push(ev.switch_resistances[i]);
        }
        Ok(())
    };
    record(&mut trace, 0.0, &y0)?;

    let mut atol = vec![config.atol_charge; m];
    atol.extend(std::iter::repeat_n(config.atol_strain, m));
    let opts = rodas::Options {
        rtol: config.rtol,
        atol,
        max_step: config.max_step,
        initial_step: config.initial_step,
        t_end: config.t_end,
        max_steps: config.max_steps,
    };

    let mut stats = IntegrationStats {
        error_estimate: vec![0.0; 2 * m],
        peak_rates: vec![0.0; 2 * m],
        final_state: y0.clone(),
        ..Default::default()
    };
    let mut next_sample = 1usize;
    let counters = rodas::integrate(
        |y, dy| {
            let rates = system.rates(y)?;
            dy.copy_from_slice(&rates);
            Ok(())
        },
        y0,
        &opts,
        |acc| {
            let t1 = acc.t0 + acc.h;
            let last = t1 >= config.t_end * (1.0 - 1e-12);
            while next_sample < n_samples {
                let ts = next_sample as f64 * config.sample_interval;
                if ts > t1 && !last {
                    break;
                }
                let theta = ((ts - acc.t0) / acc.h).clamp(0.0, 1.0);
                record(&mut trace, ts, &acc.dense.eval(theta))?;
                next_sample += 1;
            }
            for (e, x) in stats.error_estimate.iter_mut().zip(acc.error) {
                *e += x.abs();
            }
            let ev = system.evaluate(acc.y)?;
            for (p, r) in stats.peak_rates.iter_mut().zip(&ev.rates) {
                *p = p.max(r.abs());
            }
            if config.check_kcl {
                let res = system.kcl_residual(&ev);
                stats.max_kcl_residual = stats.max_kcl_residual.max(res);
                stats.max_kcl_charge = stats.max_kcl_charge.max(res * acc.h);
            }
            stats.final_state.copy_from_slice(acc.y);
            Ok(())
        },
    )?;
    stats.accepted_steps = counters.accepted;
    stats.rejected_steps = counters.rejected;
    stats.rhs_evaluations = counters.rhs_evals;
    stats.jacobians = counters.jacobians;
    Ok(Solution { trace, stats })
}

/// Assemble and integrate in one call.
pub fn simulate(model: &CircuitModel, config: &SolverConfig) -> Result<Solution, DynamicsError> {
    let system = assemble(model)?;
    integrate(&system, config)
}
