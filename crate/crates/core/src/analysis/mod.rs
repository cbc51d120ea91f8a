//! Oscillation metrics of simulated traces and parameter sweeps.

mod signal;
mod sweep;

use std::fmt::Write;

use thiserror::Error;

pub use signal::{
    cycle_amplitudes, detect_settling, estimate_frequency, estimate_phase_shift, rising_crossings, FrequencyEstimate,
    Settling, HYSTERESIS, MIN_CROSSINGS,
};
pub use sweep::{run_cell, sweep, CellOutcome, SweepCell, SweepResult};

use crate::dynamics::Trace;
use crate::netlist::{CircuitModel, NodeId, GROUND};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("insufficient cycles: {found} crossings, need {needed}")]
    InsufficientCycles { found: usize, needed: usize },
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("signals oscillate at different frequencies ({a} Hz vs {b} Hz)")]
    FrequencyMismatch { a: f64, b: f64 },
    #[error("window shorter than the correlation lag range")]
    WindowTooShort,
    #[error("sweep axis '{0}' must be non-empty and strictly monotone")]
    BadAxis(&'static str),
    #[error("trace has no node '{0}'")]
    MissingNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Allowed relative spread of post-settling cycle amplitudes.
    pub amplitude_tolerance: f64,
    /// Cycles required after settling for a positive verdict.
    pub min_cycles: usize,
    /// Smallest peak-to-peak amplitude, relative to the largest node
    /// voltage seen, that still counts as oscillation.
    pub min_relative_amplitude: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            amplitude_tolerance: 0.05,
            min_cycles: 5,
            min_relative_amplitude: 0.01,
        }
    }
}

/// Delay of `to` behind `from`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShift {
    pub from: String,
    pub to: String,
    pub degrees: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub oscillating: bool,
    /// Hz; NaN when no frequency could be measured.
    pub frequency: f64,
    pub period_std: f64,
    pub nodes: Vec<String>,
    /// Median post-settling peak-to-peak amplitude per node, V.
    pub amplitudes: Vec<f64>,
    /// Around the ring in the direction of travel of the wave.
    pub phase_shifts: Vec<PhaseShift>,
    pub settling_time: f64,
    pub cycles_observed: usize,
    /// Largest relative cycle-amplitude deviation after settling.
    pub amplitude_variation: f64,
    /// Why the verdict is false, if it is.
    pub reason: Option<String>,
}

/// Order signal nodes around the ring: node `j` precedes node `k` when a
/// switch on `k` is squeezed by an actuator on `j`. Falls back to model
/// order when the couplings do not form one cycle.
pub fn ring_order(model: &CircuitModel) -> Vec<NodeId> {
    let nodes = model.signal_nodes();
    let node_of_actuator = |i: usize| {
        let d = &model.actuators[i];
        if d.a == GROUND {
            d.b
        } else {
            d.a
        }
    };
    let successor = |j: NodeId| -> Option<NodeId> {
        let mut next = model.switches.iter().filter_map(|s| {
            let k = if s.a == GROUND { s.b } else { s.a };
            (s.coupled < model.actuators.len() && node_of_actuator(s.coupled) == j && nodes.contains(&k)).then_some(k)
        });
        let first = next.next();
        if next.next().is_some() {
            None
        } else {
            first
        }
    };
    if nodes.is_empty() {
        return nodes;
    }
    let mut order = vec![nodes[0]];
    while order.len() < nodes.len() {
        match successor(*order.last().unwrap()) {
            Some(k) if !order.contains(&k) => order.push(k),
            _ => return nodes,
        }
    }
    if successor(*order.last().unwrap()) != Some(order[0]) {
        return nodes;
    }
    order
}

fn not_oscillating(nodes: Vec<String>, end: f64, reason: String) -> OscillationReport {
    let n = nodes.len();
    OscillationReport {
        oscillating: false,
        frequency: f64::NAN,
        period_std: f64::NAN,
        nodes,
        amplitudes: vec![0.0; n],
        phase_shifts: Vec::new(),
        settling_time: end,
        cycles_observed: 0,
        amplitude_variation: f64::NAN,
        reason: Some(reason),
    }
}

/// Analyze the voltages of the model's signal nodes.
pub fn analyze(
    trace: &Trace,
    model: &CircuitModel,
    options: &AnalysisOptions,
) -> Result<OscillationReport, AnalysisError> {
    let names: Vec<String> = ring_order(model).into_iter().map(|k| model.nodes[k].clone()).collect();
    analyze_nodes(trace, &names, options)
}

/// Analyze the named node voltages, taken to be ring-ordered.
pub fn analyze_nodes(
    trace: &Trace,
    names: &[String],
    options: &AnalysisOptions,
) -> Result<OscillationReport, AnalysisError> {
    let mut series = Vec::with_capacity(names.len());
    for n in names {
        series.push(trace.voltage(n).ok_or_else(|| AnalysisError::MissingNode(n.clone()))?);
    }
    let end = trace.times.last().copied().unwrap_or(0.0);
    let names = names.to_vec();
    if series.is_empty() {
        return Ok(not_oscillating(names, end, "no signal nodes".into()));
    }
    let scale = trace
        .voltages
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let settlings: Vec<Settling> = series
        .iter()
        .map(|s| detect_settling(&trace.times, s, options.amplitude_tolerance))
        .collect();
    if let Some((i, _)) = settlings.iter().enumerate().find(|(_, s)| !s.settled) {
        return Ok(not_oscillating(
            names.clone(),
            end,
            format!("node {} never settles", names[i]),
        ));
    }
    let settling_time = settlings.iter().map(|s| s.time).fold(0.0, f64::max);
    let start = trace.index_at(settling_time);
    let times = &trace.times[start..];

    let mut amplitudes = Vec::new();
    let mut variation: f64 = 0.0;
    let mut cycles = usize::MAX;
    let mut freqs = Vec::new();
    let mut period_std: f64 = 0.0;
    for (k, s) in series.iter().enumerate() {
        let window = &s[start..];
        let (mid, amp) = signal::level(window);
        let (_, amps) = cycle_amplitudes(times, window, mid, HYSTERESIS * amp);
        if amps.is_empty() {
            return Ok(not_oscillating(
                names.clone(),
                end,
                format!("node {} has no full cycle", names[k]),
            ));
        }
        let med = signal::median(&amps);
        variation = variation.max(amps.iter().map(|a| (a - med).abs() / med).fold(0.0, f64::max));
        cycles = cycles.min(amps.len());
        amplitudes.push(med);
        match estimate_frequency(times, window) {
            Ok(f) => {
                freqs.push(f.frequency);
                period_std = period_std.max(f.period_std);
            }
            Err(e) => return Ok(not_oscillating(names.clone(), end, format!("node {}: {e}", names[k]))),
        }
    }
    let frequency = freqs.iter().sum::<f64>() / freqs.len() as f64;

    let mut phase_shifts = Vec::new();
    if series.len() > 1 {
        let n = series.len();
        let forward: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let backward: Vec<(usize, usize)> = (0..n).map(|i| ((n - i) % n, (2 * n - i - 1) % n)).collect();
        let mut best: Option<(f64, Vec<PhaseShift>)> = None;
        for pairs in [forward, backward] {
            let mut total = 0.0;
            let mut shifts = Vec::new();
            for (i, j) in pairs {
                let deg = estimate_phase_shift(times, &series[i][start..], &series[j][start..])?;
                total += deg;
                shifts.push(PhaseShift {
                    from: names[i].clone(),
                    to: names[j].clone(),
                    degrees: deg,
                });
            }
            if best.as_ref().is_none_or(|(t, _)| total < *t) {
                best = Some((total, shifts));
            }
        }
        phase_shifts = best.map(|(_, s)| s).unwrap_or_default();
    }

    let min_amp = amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
    let reason = if cycles < options.min_cycles {
        Some(format!("only {cycles} cycles after settling"))
    } else if variation >= options.amplitude_tolerance {
        Some(format!("amplitude varies by {:.1}%", 100.0 * variation))
    } else if min_amp < options.min_relative_amplitude * scale {
        Some(format!("amplitude {min_amp:.3e} V below threshold"))
    } else {
        None
    };
    Ok(OscillationReport {
        oscillating: reason.is_none(),
        frequency,
        period_std,
        nodes: names,
        amplitudes,
        phase_shifts,
        settling_time,
        cycles_observed: cycles,
        amplitude_variation: variation,
        reason,
    })
}

impl OscillationReport {
    /// Flat `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "oscillating = {}", self.oscillating);
        let _ = writeln!(out, "frequency_hz = {}", self.frequency);
        let _ = writeln!(out, "period_std_s = {}", self.period_std);
        let _ = writeln!(out, "settling_time_s = {}", self.settling_time);
        let _ = writeln!(out, "cycles_observed = {}", self.cycles_observed);
        let _ = writeln!(out, "amplitude_variation = {}", self.amplitude_variation);
        for (n, a) in self.nodes.iter().zip(&self.amplitudes) {
            let _ = writeln!(out, "amplitude_v.{n} = {a}");
        }
        for p in &self.phase_shifts {
            let _ = writeln!(out, "phase_deg.{}.{} = {}", p.from, p.to, p.degrees);
        }
        if let Some(r) = &self.reason {
            let _ = writeln!(out, "reason = {r}");
        }
        out
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("oscillating,freq_hz,period_std_s,settling_s,cycles,amplitude_variation");
        for n in &self.nodes {
            let _ = write!(h, ",amp_{n}");
        }
        for p in &self.phase_shifts {
            let _ = write!(h, ",phase_{}_{}", p.from, p.to);
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut r = format!(
            "{},{},{},{},{},{}",
            self.oscillating,
            self.frequency,
            self.period_std,
            self.settling_time,
            self.cycles_observed,
            self.amplitude_variation
        );
        for a in &self.amplitudes {
            let _ = write!(r, ",{a}");
        }
        for p in &self.phase_shifts {
            let _ = write!(r, ",{}", p.degrees);
        }
        r
    }
}
