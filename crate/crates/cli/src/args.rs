use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use elastonet::netlist::units::{parse_quantity, Unit};

#[derive(Debug, Parser)]
#[command(
    name = "elastonet",
    version,
    about = "Simulate dielectric elastomer oscillator networks and the robots they drive"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a netlist, then print its canonical form.
    Check {
        /// Netlist file to check.
        netlist: PathBuf,
    },
    /// Integrate one circuit and write trace.csv, gait.csv and report.txt.
    Simulate(SimulateArgs),
    /// Run a grid of simulations and write sweep.csv and sweep.svg.
    Sweep(SweepArgs),
    /// Rebuild gait.csv from an existing trace CSV.
    Gait(GaitArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub feet: FootArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept axis as NAME=lo:hi:count with NAME one of RS or VS (inclusive,
    /// linear). Give it twice for a grid; the first axis is the plot's x axis.
    #[arg(long, value_name = "NAME=LO:HI:COUNT")]
    pub vary: Vec<String>,
    /// Worker threads for the sweep cells (default: one per core).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub feet: FootArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GaitArgs {
    /// Trace CSV written by `simulate`.
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
    /// Netlist whose feet and actuators match the trace (default: built-in robot).
    #[arg(long, value_name = "PATH")]
    pub netlist: Option<PathBuf>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub feet: FootArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    /// Netlist file (default: built-in six-actuator robot).
    #[arg(long, value_name = "PATH")]
    pub netlist: Option<PathBuf>,
    /// Set every supply to this voltage, e.g. 3kV.
    #[arg(long, value_name = "VOLTS", value_parser = volts)]
    pub vs: Option<f64>,
    /// Set every resistor to this resistance, e.g. 100Meg.
    #[arg(long, value_name = "OHMS", value_parser = ohms)]
    pub rs: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Simulated time, e.g. 30s.
    #[arg(long, value_name = "SECONDS", value_parser = seconds)]
    pub duration: Option<f64>,
    /// Relative tolerance of the integrator.
    #[arg(long, value_name = "TOL", value_parser = positive)]
    pub rtol: Option<f64>,
    /// Absolute tolerance on actuator charge, C.
    #[arg(long, value_name = "COULOMBS", value_parser = positive)]
    pub atol_charge: Option<f64>,
    /// Absolute tolerance on actuator strain.
    #[arg(long, value_name = "TOL", value_parser = positive)]
    pub atol_strain: Option<f64>,
    /// Largest integrator step.
    #[arg(long, value_name = "SECONDS", value_parser = seconds)]
    pub max_step: Option<f64>,
    /// Spacing of trace samples.
    #[arg(long, value_name = "SECONDS", value_parser = seconds)]
    pub sample_interval: Option<f64>,
    /// Initial charge on the first actuator as a fraction of C_ref * V_S;
    /// with --seed, the amplitude of random charges on every actuator.
    #[arg(long, value_name = "FRACTION", value_parser = non_negative)]
    pub perturbation: Option<f64>,
    /// Seed for random initial charges.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Hold strains at their initial values (pure RC network).
    #[arg(long)]
    pub freeze_mechanics: bool,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Allowed relative spread of cycle amplitudes after settling.
    #[arg(long, value_name = "FRACTION", value_parser = positive)]
    pub amplitude_tolerance: Option<f64>,
    /// Cycles required after settling to call it oscillating.
    #[arg(long, value_name = "N")]
    pub min_cycles: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FootArgs {
    /// Override the leg segment length of every foot, m.
    #[arg(long, value_name = "METRES", value_parser = positive)]
    pub leg_length: Option<f64>,
    /// Override the stride gain of every foot.
    #[arg(long, value_name = "GAIN", value_parser = positive)]
    pub stride_gain: Option<f64>,
    /// Override the strain at which every foot lifts.
    #[arg(long, value_name = "STRAIN", value_parser = non_negative)]
    pub engage_strain: Option<f64>,
    /// Override the strain at which every foot plants.
    #[arg(long, value_name = "STRAIN", value_parser = non_negative)]
    pub release_strain: Option<f64>,
    /// Override the ratchet direction of every foot: fwd or rev.
    #[arg(long, value_name = "DIR")]
    pub orient: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory for output files (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Flat key = value file of defaults for these flags.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

fn quantity(text: &str, unit: Unit) -> Result<f64, String> {
    let q = parse_quantity(text).map_err(|e| format!("'{text}': {e}"))?;
    match q.unit {
        Some(u) if u != unit => Err(format!("'{text}' is in {u}, expected {unit}")),
        _ if !q.value.is_finite() => Err(format!("'{text}' is not finite")),
        _ => Ok(q.value),
    }
}

pub fn volts(text: &str) -> Result<f64, String> {
    let v = quantity(text, Unit::Volt)?;
    if v < 0.0 {
        return Err(format!("'{text}' must not be negative"));
    }
    Ok(v)
}

pub fn ohms(text: &str) -> Result<f64, String> {
    let v = quantity(text, Unit::Ohm)?;
    if v <= 0.0 {
        return Err(format!("'{text}' must be positive"));
    }
    Ok(v)
}

fn seconds(text: &str) -> Result<f64, String> {
    let v = quantity(text, Unit::Second)?;
    if v <= 0.0 {
        return Err(format!("'{text}' must be positive"));
    }
    Ok(v)
}

fn positive(text: &str) -> Result<f64, String> {
    let v = parse_quantity(text).map_err(|e| format!("'{text}': {e}"))?.value;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("'{text}' must be positive"));
    }
    Ok(v)
}

fn non_negative(text: &str) -> Result<f64, String> {
    let v = parse_quantity(text).map_err(|e| format!("'{text}': {e}"))?.value;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("'{text}' must not be negative"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rs,
    Vs,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Rs => "RS",
            Axis::Vs => "VS",
        }
    }
}

/// Parse `NAME=lo:hi:count` into an axis and its inclusive, linearly spaced
/// values.
pub fn parse_range(text: &str) -> Result<(Axis, Vec<f64>), String> {
    let (name, spec) = text
        .split_once('=')
        .ok_or_else(|| format!("range '{text}' must look like NAME=lo:hi:count"))?;
    let axis = match name.trim().to_ascii_uppercase().as_str() {
        "RS" => Axis::Rs,
        "VS" => Axis::Vs,
        other => return Err(format!("unknown sweep variable '{other}' (expected RS or VS)")),
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("range '{text}' must look like NAME=lo:hi:count"));
    };
    let parse = |s: &str| match axis {
        Axis::Rs => ohms(s.trim()),
        Axis::Vs => volts(s.trim()),
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| format!("count '{count}' in '{text}' is not a whole number"))?;
    match count {
        0 => Err(format!("range '{text}' is empty")),
        1 if lo != hi => Err(format!("range '{text}' has one point but different ends")),
        1 => Ok((axis, vec![lo])),
        _ if lo == hi => Err(format!("range '{text}' repeats one value")),
        _ => Ok((
            axis,
            (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let (axis, v) = parse_range("RS=50Meg:200Meg:6").unwrap();
        assert_eq!(axis, Axis::Rs);
        assert_eq!(v, vec![50e6, 80e6, 110e6, 140e6, 170e6, 200e6]);
        let (axis, v) = parse_range("vs=2kV:3.6kV:5").unwrap();
        assert_eq!(axis, Axis::Vs);
        assert_eq!(v.len(), 5);
        assert!((v[4] - 3600.0).abs() < 1e-9);
        assert_eq!(parse_range("VS=3kV:3kV:1").unwrap().1, vec![3000.0]);
        for bad in [
            "RS=1:2:0",
            "RS=1:2",
            "XX=1:2:3",
            "VS=1ohm:2:3",
            "RS=1:1:3",
            "VS=1:2:x",
            "RS",
        ] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn quantities() {
        assert_eq!(volts("3kV").unwrap(), 3000.0);
        assert_eq!(volts("0").unwrap(), 0.0);
        assert!(volts("3kohm").is_err());
        assert!(ohms("-5").is_err());
        assert_eq!(seconds("30s").unwrap(), 30.0);
    }
}
