use std::fmt::Write;

use super::{analyze, AnalysisError, AnalysisOptions, OscillationReport};
use crate::dynamics::{simulate, SolverConfig, Trace};
use crate::exec::par_map;
use crate::locomotion::{simulate_gait, speed, GaitTrace};
use crate::netlist::CircuitModel;

/// Everything one simulate-and-analyze run produces.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub trace: Trace,
    pub report: OscillationReport,
    pub gait: Option<GaitTrace>,
    /// m/s over the post-settling window; `None` without feet.
    pub speed: Option<f64>,
}

/// Simulate, analyze and, if the model has feet, walk.
pub fn run_cell(model: &CircuitModel, config: &SolverConfig, options: &AnalysisOptions) -> Result<CellOutcome, String> {
    let solution = simulate(model, config).map_err(|e| e.to_string())?;
    let trace = solution.trace;
    let report = analyze(&trace, model, options).map_err(|e| e.to_string())?;
    let (gait, speed) = if model.feet.is_empty() {
        (None, None)
    } else {
        let gait = simulate_gait(&trace, &model.feet).map_err(|e| e.to_string())?;
        let t_start = if report.oscillating { report.settling_time } else { 0.0 };
        let v = speed(&gait, t_start).unwrap_or(0.0);
        (Some(gait), Some(v))
    };
    Ok(CellOutcome {
        trace,
        report,
        gait,
        speed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub series_resistance: f64,
    pub supply_voltage: f64,
    pub report: Option<OscillationReport>,
    pub speed: Option<f64>,
    /// Failure reason when the cell could not be simulated.
    pub error: Option<String>,
}

/// Grid of cells, series resistance outer and supply voltage inner.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rs_values: Vec<f64>,
    pub vs_values: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

fn strictly_monotone(v: &[f64]) -> bool {
    !v.is_empty()
        && v.iter().all(|x| x.is_finite())
        && (v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0]))
}

/// Run one integration per `(R_S, V_S)` pair, setting every resistor to
/// `R_S` and every supply to `V_S`. Cells run in parallel when the
/// `parallel` feature is on; the result order is the same either way.
pub fn sweep(
    model: &CircuitModel,
    rs_values: &[f64],
    vs_values: &[f64],
    config: &SolverConfig,
    options: &AnalysisOptions,
) -> Result<SweepResult, AnalysisError> {
    if !strictly_monotone(rs_values) {
        return Err(AnalysisError::BadAxis("rs"));
    }
    if !strictly_monotone(vs_values) {
        return Err(AnalysisError::BadAxis("vs"));
    }
    let grid: Vec<(f64, f64)> = rs_values
        .iter()
        .flat_map(|&rs| vs_values.iter().map(move |&vs| (rs, vs)))
        .collect();
    let cells = par_map(&grid, |&(rs, vs)| {
        let cell_model = model.with_series_resistance(rs).with_supply_voltage(vs);
        match run_cell(&cell_model, config, options) {
            Ok(out) => SweepCell {
                series_resistance: rs,
                supply_voltage: vs,
                report: Some(out.report),
                speed: out.speed,
                error: None,
            },
            Err(e) => SweepCell {
                series_resistance: rs,
                supply_voltage: vs,
                report: None,
                speed: None,
                error: Some(e),
            },
        }
    });
    Ok(SweepResult {
        rs_values: rs_values.to_vec(),
        vs_values: vs_values.to_vec(),
        cells,
    })
}

impl SweepResult {
    /// Long-format CSV, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "rs_ohm,vs_volt,oscillating,freq_hz,speed_mps,period_std_s,settling_s,cycles,min_amp_v,max_amp_v,error\n",
        );
        for c in &self.cells {
            let _ = write!(out, "{},{},", c.series_resistance, c.supply_voltage);
            match &c.report {
                Some(r) => {
                    let min = r.amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = r.amplitudes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let _ = write!(
                        out,
                        "{},{},{},{},{},{},{},{},",
                        r.oscillating,
                        r.frequency,
                        c.speed.map_or(String::new(), |v| v.to_string()),
                        r.period_std,
                        r.settling_time,
                        r.cycles_observed,
                        min,
                        max
                    );
                }
                None => out.push_str("false,NaN,,,,,,,"),
            }
            let reason = c
                .error
                .as_deref()
                .or(c.report.as_ref().and_then(|r| r.reason.as_deref()));
            out.push_str(&reason.unwrap_or("").replace([',', '\n'], ";"));
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, rs_index: usize, vs_index: usize) -> &SweepCell {
        &self.cells[rs_index * self.vs_values.len() + vs_index]
    }
}
