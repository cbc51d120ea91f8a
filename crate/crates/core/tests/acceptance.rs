//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use elastonet::analysis::{
    analyze, estimate_phase_shift, run_cell, sweep, AnalysisOptions, OscillationReport, SweepResult,
};
use elastonet::dynamics::{assemble, simulate, Perturbation, SolverConfig};
use elastonet::electromech::{capacitance, des_resistance, inverter_static_output, DesCurve, MembraneParams};
use elastonet::locomotion::simulate_gait;
use elastonet::netlist::{from_bytes, from_text, parse, parse_bytes, print_canonical, ring_netlist, trevor, Code};
use proptest::test_runner::{Config, TestRunner};

fn report(id: u32, name: &str, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout().lock(), "[acceptance {id}] {verdict} {name}: {detail}");
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn trevor_run() -> &'static (OscillationReport, elastonet::dynamics::Solution, Duration) {
    static RUN: OnceLock<(OscillationReport, elastonet::dynamics::Solution, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let model = trevor();
        let config = SolverConfig {
            check_kcl: true,
            ..SolverConfig::default()
        };
        let start = Instant::now();
        let solution = simulate(&model, &config).expect("trevor integrates");
        let rep = analyze(&solution.trace, &model, &AnalysisOptions::default()).expect("trevor analyzes");
        (rep, solution, start.elapsed())
    })
}

#[test]
fn c1_self_primed_oscillation() {
    let (rep, _, wall) = trevor_run();
    let ok =
        rep.oscillating && rep.cycles_observed >= 20 && rep.amplitude_variation < 0.05 && wall.as_secs_f64() < 30.0;
    report(
        1,
        "self-primed oscillation",
        ok,
        format!(
            "verdict {} at {:.4} Hz, {} cycles, variation {:.2e}, wall {:.2} s",
            rep.oscillating,
            rep.frequency,
            rep.cycles_observed,
            rep.amplitude_variation,
            wall.as_secs_f64()
        ),
    );
}

#[test]
fn c2_phase_structure() {
    let (rep, _, _) = trevor_run();
    let degrees: Vec<f64> = rep.phase_shifts.iter().map(|p| p.degrees).collect();
    let sum: f64 = degrees.iter().sum();
    let ok = degrees.len() == 3 && degrees.iter().all(|d| (d - 120.0).abs() <= 15.0) && (sum - 360.0).abs() <= 5.0;
    report(
        2,
        "120 degree phase structure",
        ok,
        format!("shifts {degrees:.3?}, sum {sum:.3}"),
    );
}

#[test]
fn c3_inverter_statics() {
    let curve = DesCurve::default();
    let membrane = MembraneParams::default();
    let (rs, vs) = (100e6, 3000.0);
    let high = inverter_static_output(0.0, rs, vs, &curve, &membrane).unwrap();
    let low = inverter_static_output(3000.0, rs, vs, &curve, &membrane).unwrap();
    let divider = vs * curve.r_on / (curve.r_on + rs);
    let ok = high >= 0.99 * vs && low <= 1.05 * divider && low < 1500.0;
    report(
        3,
        "inverter statics",
        ok,
        format!("high {high:.2} V, low {low:.3} V (divider {divider:.3} V)"),
    );
}

const RS_AXIS: [f64; 6] = [50e6, 80e6, 110e6, 140e6, 170e6, 200e6];
const VS_AXIS: [f64; 9] = [1200.0, 1500.0, 1800.0, 2100.0, 2400.0, 2700.0, 3000.0, 3300.0, 3600.0];

struct Sweeps {
    rs: SweepResult,
    vs: SweepResult,
    wall: Duration,
}

fn sweeps() -> &'static Sweeps {
    static SWEEPS: OnceLock<Sweeps> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let model = trevor();
        let config = SolverConfig::default();
        let opts = AnalysisOptions::default();
        let start = Instant::now();
        let rs = sweep(&model, &RS_AXIS, &[3000.0], &config, &opts).unwrap();
        let vs = sweep(&model, &[100e6], &VS_AXIS, &config, &opts).unwrap();
        Sweeps {
            rs,
            vs,
            wall: start.elapsed(),
        }
    })
}

fn oscillates(result: &SweepResult, k: usize) -> bool {
    result.cells[k].report.as_ref().is_some_and(|r| r.oscillating)
}

fn frequency(result: &SweepResult, k: usize) -> f64 {
    result.cells[k].report.as_ref().map_or(f64::NAN, |r| r.frequency)
}

/// Oscillation threshold in supply voltage by bisection on the verdict.
fn threshold_by_bisection(rs: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let model = trevor().with_series_resistance(rs);
    let config = SolverConfig::default();
    let opts = AnalysisOptions::default();
    let verdict = |v: f64| {
        run_cell(&model.with_supply_voltage(v), &config, &opts)
            .map(|c| c.report.oscillating)
            .unwrap_or(false)
    };
    assert!(!verdict(lo) && verdict(hi), "threshold not bracketed by [{lo}, {hi}]");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if verdict(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn c4_frequency_control() {
    let s = sweeps();
    let rs_freqs: Vec<f64> = (0..RS_AXIS.len()).map(|k| frequency(&s.rs, k)).collect();
    let rs_ok = (0..RS_AXIS.len()).all(|k| oscillates(&s.rs, k)) && rs_freqs.windows(2).all(|w| w[1] <= w[0]);

    let verdicts: Vec<bool> = (0..VS_AXIS.len()).map(|k| oscillates(&s.vs, k)).collect();
    let flips = verdicts.windows(2).filter(|w| w[0] != w[1]).count();
    let single_flip = flips <= 1 && !verdicts[0] && verdicts[VS_AXIS.len() - 1];
    let above: Vec<f64> = (0..VS_AXIS.len())
        .filter(|&k| verdicts[k])
        .map(|k| frequency(&s.vs, k))
        .collect();
    let vs_ok = above.len() >= 5 && above.windows(2).all(|w| w[1] >= w[0]);

    let threshold = threshold_by_bisection(100e6, VS_AXIS[0], VS_AXIS[VS_AXIS.len() - 1], 10.0);
    let agrees = VS_AXIS
        .iter()
        .zip(&verdicts)
        .all(|(&v, &osc)| (v - threshold).abs() <= 10.0 || osc == (v > threshold));

    let ok = rs_ok && vs_ok && single_flip && agrees && s.wall.as_secs_f64() < 300.0;
    report(
        4,
        "frequency control",
        ok,
        format!(
            "f(RS) {rs_freqs:.4?}; f(VS above threshold) {above:.4?}; verdicts {verdicts:?}; bisected threshold {threshold:.0} V; sweep wall {:.1} s",
            s.wall.as_secs_f64()
        ),
    );
}

#[test]
fn c5_ring_parity() {
    let opts = AnalysisOptions::default();
    let config = SolverConfig {
        t_end: 20.0,
        ..SolverConfig::default()
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for stages in [3usize, 5] {
        let model = from_text(&ring_netlist(stages, 3000.0, 100e6)).unwrap();
        let sol = simulate(&model, &config).unwrap();
        let rep = analyze(&sol.trace, &model, &opts).unwrap();
        ok &= rep.oscillating;
        detail.push(format!(
            "{stages}-ring oscillating {} at {:.4} Hz",
            rep.oscillating, rep.frequency
        ));
    }
    let model = from_text(&ring_netlist(2, 3000.0, 100e6)).unwrap();
    let sol = simulate(&model, &config).unwrap();
    let system = assemble(&model).unwrap();
    let rates = system.rates(&sol.stats.final_state).unwrap();
    let ratio = rates
        .iter()
        .zip(&sol.stats.peak_rates)
        .map(|(r, p)| if *p > 0.0 { r.abs() / p } else { r.abs() })
        .fold(0.0, f64::max);
    let rep = analyze(&sol.trace, &model, &opts).unwrap();
    ok &= !rep.oscillating && ratio < 1e-6;
    detail.push(format!(
        "2-ring oscillating {}, residual/peak {ratio:.2e}",
        rep.oscillating
    ));
    report(5, "odd/even ring law", ok, detail.join("; "));
}

#[test]
fn c6_integrator_oracle() {
    let text = "supply VS r gnd 3kV\nresistor RS r a 100Meg\ndea D1 a gnd\ndes S1 a gnd coupled=D1\n";
    let model = from_text(text).unwrap();
    let config = SolverConfig {
        t_end: 0.5,
        freeze_mechanics: true,
        perturbation: Perturbation::None,
        check_kcl: true,
        ..SolverConfig::default()
    };
    let sol = simulate(&model, &config).unwrap();
    let c = capacitance(0.0, &model.actuators[0].membrane).unwrap();
    let rd = des_resistance(0.0, &model.switches[0].curve).unwrap();
    let rs = model.resistors[0].resistance;
    let v_inf = 3000.0 * rd / (rs + rd);
    let tau = c * rs * rd / (rs + rd);
    let v = sol.trace.voltage("a").unwrap();
    let mut worst: f64 = 0.0;
    for (t, v) in sol.trace.times.iter().zip(v) {
        let exact = v_inf * (1.0 - (-t / tau).exp());
        let allowed = config.rtol * exact.abs() + config.atol_charge / c;
        worst = worst.max((v - exact).abs() / allowed);
    }
    let kcl = sol.stats.max_kcl_charge;
    let (_, trevor_sol, _) = trevor_run();
    let trevor_kcl = trevor_sol.stats.max_kcl_charge;
    let ok = worst <= 1.0 && kcl <= config.atol_charge && trevor_kcl <= config.atol_charge;
    report(
        6,
        "integrator oracle",
        ok,
        format!(
            "worst error/tolerance {worst:.3} over {} samples (tau {tau:.4e} s); KCL charge {kcl:.2e} C (trevor {trevor_kcl:.2e} C)",
            sol.trace.len()
        ),
    );
}

#[test]
fn c7_locomotion() {
    let (rep, sol, _) = trevor_run();
    let model = trevor();
    let gait = simulate_gait(&sol.trace, &model.feet).unwrap();
    let monotone = gait.robot.windows(2).all(|w| w[1] >= w[0])
        && gait
            .feet
            .iter()
            .zip(&gait.contact)
            .all(|(x, c)| (1..x.len()).all(|i| !c[i] || x[i] >= x[i - 1]));

    let start = sol.trace.index_at(rep.settling_time);
    let v = elastonet::locomotion::speed(&gait, rep.settling_time).unwrap();
    let stride: f64 = model
        .feet
        .iter()
        .map(|f| {
            let s = &sol.trace.strains[f.trailing()][start..];
            f.params.stride(s.iter().copied().fold(0.0, f64::max))
        })
        .sum::<f64>()
        / model.feet.len() as f64;
    let predicted = stride * rep.frequency;
    let speed_ok = v > 0.0 && (v - predicted).abs() <= 0.1 * predicted;

    // Wave direction along the body: the delay of each segment's strain
    // behind its left neighbour; below 180 degrees the wave runs rightward.
    let times = &sol.trace.times[start..];
    let wave: f64 = model
        .feet
        .iter()
        .map(|f| {
            let a = &sol.trace.strains[f.left][start..];
            let b = &sol.trace.strains[f.right][start..];
            let d = estimate_phase_shift(times, a, b).unwrap();
            if d < 180.0 {
                1.0
            } else {
                -1.0
            }
        })
        .sum::<f64>();
    let opposite = wave.signum() == -v.signum() && wave.abs() == model.feet.len() as f64;

    let s = sweeps();
    let speeds: Vec<f64> = (0..VS_AXIS.len())
        .filter(|&k| oscillates(&s.vs, k))
        .map(|k| s.vs.cells[k].speed.unwrap())
        .collect();
    let trend = speeds.len() >= 2 && speeds.windows(2).all(|w| w[1] >= w[0]);

    report(
        7,
        "locomotion",
        monotone && speed_ok && opposite && trend,
        format!(
            "monotone {monotone}; speed {v:.4e} m/s vs stride*f {predicted:.4e} m/s; wave sign {wave} vs travel {}; speed(VS) {:?}",
            v.signum(),
            speeds.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn c8_parser_robustness() {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        ..Config::default()
    });
    runner
        .run(&proptest::collection::vec(proptest::num::u8::ANY, 0..512), |bytes| {
            let _ = from_bytes(&bytes);
            let _ = parse_bytes(&bytes);
            Ok(())
        })
        .unwrap();
    runner
        .run(&common::netlist_like_text(), |text| {
            let _ = from_text(&text);
            Ok(())
        })
        .unwrap();

    let mut runner = TestRunner::new(Config {
        cases: 1000,
        ..Config::default()
    });
    let round_trip = runner.run(&common::valid_netlist_text(), |text| {
        let ast = parse(&text).unwrap();
        let printed = print_canonical(&ast);
        let again = parse(&printed).unwrap();
        proptest::prop_assert!(ast.structurally_eq(&again));
        proptest::prop_assert_eq!(print_canonical(&again), printed);
        Ok(())
    });

    let cases = common::negative_cases();
    let covered = Code::ALL.iter().all(|code| cases.iter().any(|(c, _, _)| c == code));
    let detected = cases
        .iter()
        .all(|(code, src, _)| from_bytes(src).is_err_and(|d| d.iter().any(|d| d.code == *code)));
    let ok = round_trip.is_ok() && covered && detected;
    report(
        8,
        "parser robustness",
        ok,
        format!(
            "2000 fuzz inputs without panic; 1000 round trips {}; {} codes covered {covered}, detected {detected}",
            if round_trip.is_ok() { "ok" } else { "FAILED" },
            Code::ALL.len()
        ),
    );
}

#[test]
fn c9_determinism() {
    let model = trevor();
    let config = SolverConfig {
        t_end: 5.0,
        perturbation: Perturbation::Jitter {
            seed: 42,
            amplitude: 0.01,
        },
        ..SolverConfig::default()
    };
    let run = || {
        let sol = simulate(&model, &config).unwrap();
        let gait = simulate_gait(&sol.trace, &model.feet).unwrap();
        let sw = sweep(
            &model,
            &[80e6, 120e6],
            &[2500.0, 3000.0],
            &config,
            &AnalysisOptions::default(),
        )
        .unwrap();
        (sol.trace.to_csv(), gait.to_csv(), sw.to_csv())
    };
    let a = run();
    let b = run();
    let ok = a == b;
    report(
        9,
        "determinism",
        ok,
        format!(
            "trace {} B, gait {} B, sweep {} B identical across runs: {ok}",
            a.0.len(),
            a.1.len(),
            a.2.len()
        ),
    );
}
