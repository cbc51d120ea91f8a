//! Command-line front end: check, simulate, sweep and gait.

mod args;
mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

use elastonet::analysis::{analyze, run_cell, sweep, AnalysisOptions, SweepResult};
use elastonet::dynamics::{Perturbation, SolverConfig, Trace};
use elastonet::locomotion::{gait_from_strains, speed, Orientation};
use elastonet::netlist::{self, print_canonical, CircuitModel, Diagnostic};

pub use args::{parse_range, Axis, Cli, Command};
use args::{AnalysisArgs, CircuitArgs, FootArgs, GaitArgs, SimulateArgs, SolverArgs, SweepArgs};
use output::{line_chart_svg, write_atomic, Series};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// A failed command: message for standard error plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: format!("error: {}", message.into()),
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn numerical(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_NUMERICAL,
        message: format!("error: {}", message.into()),
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure {
            code: EXIT_NUMERICAL,
            message: format!("error: {e:#}"),
        }
    }
}

/// Parse `argv`, run the command and return the process exit code.
pub fn run(argv: impl IntoIterator<Item = OsString>) -> i32 {
    let argv = match config::expand(argv.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Check { netlist } => cmd_check(&netlist),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Gait(a) => cmd_gait(&a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.message);
            f.code
        }
    }
}

fn render_diagnostics(file: &str, diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.render(file)).collect::<Vec<_>>().join("\n")
}

fn read_netlist(path: &Path) -> Result<(String, netlist::Netlist, CircuitModel), Failure> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| input(format!("{name}: cannot read netlist: {e}")))?;
    let ast = netlist::parse_bytes(&bytes).map_err(|d| input(render_diagnostics(&name, &d)))?;
    let model = netlist::validate(&ast).map_err(|d| input(render_diagnostics(&name, &d)))?;
    Ok((name, ast, model))
}

fn cmd_check(path: &Path) -> Result<(), Failure> {
    let (_, ast, _) = read_netlist(path)?;
    print!("{}", print_canonical(&ast));
    Ok(())
}

fn load_model(path: Option<&PathBuf>) -> Result<CircuitModel, Failure> {
    match path {
        Some(p) => read_netlist(p).map(|(_, _, m)| m),
        None => Ok(netlist::trevor()),
    }
}

fn circuit(args: &CircuitArgs) -> Result<CircuitModel, Failure> {
    let mut model = load_model(args.netlist.as_ref())?;
    if let Some(v) = args.vs {
        model = model.with_supply_voltage(v);
    }
    if let Some(r) = args.rs {
        model = model.with_series_resistance(r);
    }
    Ok(model)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig, Failure> {
    let mut c = SolverConfig::default();
    if let Some(v) = args.duration {
        c.t_end = v;
    }
    if let Some(v) = args.rtol {
        c.rtol = v;
    }
    if let Some(v) = args.atol_charge {
        c.atol_charge = v;
    }
    if let Some(v) = args.atol_strain {
        c.atol_strain = v;
    }
    if let Some(v) = args.max_step {
        c.max_step = v;
    }
    if let Some(v) = args.sample_interval {
        c.sample_interval = v;
    }
    c.perturbation = match (args.seed, args.perturbation) {
        (Some(seed), amplitude) => Perturbation::Jitter {
            seed,
            amplitude: amplitude.unwrap_or(0.01),
        },
        (None, Some(fraction)) => Perturbation::Single { actuator: 0, fraction },
        (None, None) => Perturbation::default(),
    };
    c.freeze_mechanics = args.freeze_mechanics;
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

fn analysis_options(args: &AnalysisArgs) -> AnalysisOptions {
    let mut o = AnalysisOptions::default();
    if let Some(v) = args.amplitude_tolerance {
        o.amplitude_tolerance = v;
    }
    if let Some(v) = args.min_cycles {
        o.min_cycles = v;
    }
    o
}

fn apply_feet(model: &mut CircuitModel, args: &FootArgs) -> Result<(), Failure> {
    let orient = match &args.orient {
        Some(s) => Some(Orientation::parse(s).ok_or_else(|| usage(format!("--orient must be fwd or rev, got '{s}'")))?),
        None => None,
    };
    for foot in &mut model.feet {
        let p = &mut foot.params;
        if let Some(v) = args.leg_length {
            p.rest_length = v;
        }
        if let Some(v) = args.stride_gain {
            p.stride_gain = v;
        }
        if let Some(v) = args.engage_strain {
            p.engage_strain = v;
        }
        if let Some(v) = args.release_strain {
            p.release_strain = v;
        }
        if let Some(o) = orient {
            p.orientation = o;
        }
        p.validate().map_err(|e| usage(format!("foot {}: {e}", foot.name)))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut model = circuit(&args.circuit)?;
    apply_feet(&mut model, &args.feet)?;
    let config = solver_config(&args.solver)?;
    let options = analysis_options(&args.analysis);
    let out = run_cell(&model, &config, &options).map_err(numerical)?;
    let dir = &args.output.out;
    write_atomic(&dir.join("trace.csv"), &out.trace.to_csv())?;
    if let Some(g) = &out.gait {
        write_atomic(&dir.join("gait.csv"), &g.to_csv())?;
    }
    let mut report = out.report.to_key_value();
    if let Some(v) = out.speed {
        report.push_str(&format!("speed_mps = {v}\n"));
    }
    write_atomic(&dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn configure_workers(workers: Option<usize>) -> Result<(), Failure> {
    let Some(n) = workers else { return Ok(()) };
    if n == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot size worker pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without parallel support; --workers {n} ignored");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    if args.vary.is_empty() {
        return Err(usage("sweep needs at least one --vary NAME=lo:hi:count"));
    }
    if args.vary.len() > 2 {
        return Err(usage("at most two --vary axes"));
    }
    let axes: Vec<(Axis, Vec<f64>)> = args
        .vary
        .iter()
        .map(|v| parse_range(v))
        .collect::<Result<_, _>>()
        .map_err(usage)?;
    if axes.len() == 2 && axes[0].0 == axes[1].0 {
        return Err(usage(format!("axis {} given twice", axes[0].0.name())));
    }
    configure_workers(args.workers)?;
    let mut model = circuit(&args.circuit)?;
    apply_feet(&mut model, &args.feet)?;
    let config = solver_config(&args.solver)?;
    let options = analysis_options(&args.analysis);

    let axis_values = |axis: Axis| axes.iter().find(|(a, _)| *a == axis).map(|(_, v)| v.clone());
    let rs = match axis_values(Axis::Rs) {
        Some(v) => v,
        None => vec![args
            .circuit
            .rs
            .or(model.resistors.first().map(|r| r.resistance))
            .ok_or_else(|| input("netlist has no resistor to sweep"))?],
    };
    let vs = match axis_values(Axis::Vs) {
        Some(v) => v,
        None => vec![args
            .circuit
            .vs
            .or(model.supplies.first().map(|s| s.voltage))
            .unwrap_or(0.0)],
    };
    let result = sweep(&model, &rs, &vs, &config, &options).map_err(|e| usage(e.to_string()))?;
    let dir = &args.output.out;
    write_atomic(&dir.join("sweep.csv"), &result.to_csv())?;
    write_atomic(&dir.join("sweep.svg"), &sweep_plot(&result, axes[0].0))?;
    for c in result.cells.iter().filter(|c| c.error.is_some()) {
        log::warn!(
            "cell RS={} VS={} failed: {}",
            c.series_resistance,
            c.supply_voltage,
            c.error.as_deref().unwrap_or_default()
        );
    }
    print!("{}", result.to_csv());
    Ok(())
}

/// Frequency against the primary axis, one line per value of the other.
fn sweep_plot(result: &SweepResult, primary: Axis) -> String {
    let freq = |i: usize, j: usize| {
        result
            .cell(i, j)
            .report
            .as_ref()
            .filter(|r| r.oscillating)
            .map_or(f64::NAN, |r| r.frequency)
    };
    let fmt = netlist::units::format_value;
    let series: Vec<Series> = match primary {
        Axis::Rs => (0..result.vs_values.len())
            .map(|j| Series {
                label: format!("VS = {}V", fmt(result.vs_values[j])),
                points: (0..result.rs_values.len())
                    .map(|i| (result.rs_values[i] / 1e6, freq(i, j)))
                    .collect(),
            })
            .collect(),
        Axis::Vs => (0..result.rs_values.len())
            .map(|i| Series {
                label: format!("RS = {}ohm", fmt(result.rs_values[i])),
                points: (0..result.vs_values.len())
                    .map(|j| (result.vs_values[j], freq(i, j)))
                    .collect(),
            })
            .collect(),
    };
    let x_label = match primary {
        Axis::Rs => "series resistance (Mohm)",
        Axis::Vs => "supply voltage (V)",
    };
    line_chart_svg("Oscillation frequency", x_label, "frequency (Hz)", &series)
}

fn cmd_gait(args: &GaitArgs) -> Result<(), Failure> {
    let mut model = load_model(args.netlist.as_ref())?;
    apply_feet(&mut model, &args.feet)?;
    if model.feet.is_empty() {
        return Err(input("netlist declares no feet"));
    }
    let name = args.trace.display().to_string();
    let text = std::fs::read_to_string(&args.trace).map_err(|e| input(format!("{name}: cannot read trace: {e}")))?;
    let trace = Trace::from_csv(&text).map_err(|e| input(format!("{name}: {e}")))?;
    let strains: Vec<&[f64]> = model
        .actuators
        .iter()
        .map(|a| {
            trace
                .strain(&a.name)
                .ok_or_else(|| input(format!("{name}: no strain column for actuator '{}'", a.name)))
        })
        .collect::<Result<_, _>>()?;
    let gait = gait_from_strains(&trace.times, &strains, &model.feet).map_err(|e| input(e.to_string()))?;
    let report =
        analyze(&trace, &model, &analysis_options(&args.analysis)).map_err(|e| input(format!("{name}: {e}")))?;
    let t_start = if report.oscillating { report.settling_time } else { 0.0 };
    let v = speed(&gait, t_start).map_err(|e| input(format!("{name}: {e}")))?;
    write_atomic(&args.output.out.join("gait.csv"), &gait.to_csv())?;
    println!("speed_mps = {v}");
    Ok(())
}
