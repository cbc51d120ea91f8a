mod common;

use std::f64::consts::TAU;

use elastonet::analysis::{estimate_frequency, estimate_phase_shift};
use elastonet::dynamics::{initial_state, Perturbation};
use elastonet::electromech::{
    capacitance, des_resistance, equilibrium_strain, inverter_static_output, linearized_strain, strain_rate, DesCurve,
    Membrane, MembraneParams,
};
use elastonet::locomotion::{foot_kinematics, gait_from_strains, speed, FootModel, FootParams, FootState, Orientation};
use elastonet::netlist::{parse, print_canonical, trevor};
use proptest::prelude::*;

fn pull_in() -> f64 {
    Membrane::new(MembraneParams::default()).unwrap().pull_in_voltage()
}

proptest! {
    #[test]
    fn capacitance_strictly_increasing(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assume!(a != b);
        let p = MembraneParams::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(capacitance(lo, &p).unwrap() < capacitance(hi, &p).unwrap());
    }

    #[test]
    fn equilibrium_strain_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = MembraneParams::default();
        let vp = pull_in();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(equilibrium_strain(lo * vp, &p).unwrap() <= equilibrium_strain(hi * vp, &p).unwrap());
    }

    #[test]
    fn linearized_close_in_small_signal(x in 0.01f64..0.3) {
        let p = MembraneParams::default();
        let v = x * pull_in();
        let full = equilibrium_strain(v, &p).unwrap();
        let lin = linearized_strain(v, &p).unwrap();
        prop_assert!((lin - full).abs() < 0.05 * full, "{} vs {}", lin, full);
    }

    #[test]
    fn strain_rate_points_to_equilibrium(s in 0.0f64..2.0, x in 0.0f64..0.99) {
        let p = MembraneParams::default();
        let v = x * pull_in();
        let target = equilibrium_strain(v, &p).unwrap();
        let rate = strain_rate(s, v, &p).unwrap();
        prop_assert_eq!(rate.partial_cmp(&0.0), (target - s).partial_cmp(&0.0).map(|o| if target == s { std::cmp::Ordering::Equal } else { o }));
    }

    #[test]
    fn switch_monotone_non_increasing(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let c = DesCurve::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(des_resistance(lo, &c).unwrap() >= des_resistance(hi, &c).unwrap());
    }

    #[test]
    fn inverter_is_inverting(a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let p = MembraneParams::default();
        let c = DesCurve::default();
        let vp = pull_in();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let out_lo = inverter_static_output(lo * vp, 1e8, 3000.0, &c, &p).unwrap();
        let out_hi = inverter_static_output(hi * vp, 1e8, 3000.0, &c, &p).unwrap();
        prop_assert!(out_hi <= out_lo);
    }
}

#[test]
fn switch_endpoints() {
    let c = DesCurve::default();
    let p = MembraneParams::default();
    assert!(des_resistance(0.0, &c).unwrap() >= 0.99 * c.r_off);
    let on = des_resistance(p.max_strain, &c).unwrap();
    assert!(on <= 1.01 * c.r_on && (1e6..=5e6).contains(&on));
    let mid = des_resistance(c.threshold_actuation, &c).unwrap();
    assert!((mid / (c.r_off * c.r_on).sqrt() - 1.0).abs() < 1e-12);
}

#[test]
fn strain_rate_arithmetic() {
    let p = MembraneParams {
        viscoelastic_time_constant: 0.5,
        ..MembraneParams::default()
    };
    assert!((strain_rate(0.2, 0.0, &p).unwrap() + 0.4).abs() < 1e-15);
    let s = equilibrium_strain(2000.0, &p).unwrap();
    assert_eq!(strain_rate(s, 2000.0, &p).unwrap(), 0.0);
}

// ---- analysis ----

fn grid(t_end: f64, dt: f64) -> Vec<f64> {
    (0..=((t_end / dt).round() as usize)).map(|i| i as f64 * dt).collect()
}

/// Deterministic pseudo-noise in [-1, 1].
fn noise(i: usize) -> f64 {
    let x = (i as u64)
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

#[test]
fn noisy_sine_frequency() {
    let t = grid(10.0, 1e-3);
    let x: Vec<f64> = t
        .iter()
        .enumerate()
        .map(|(i, &t)| (TAU * 2.0 * t).sin() + 0.01 * noise(i))
        .collect();
    let f = estimate_frequency(&t, &x).unwrap();
    assert!((f.frequency - 2.0).abs() < 0.02, "{f:?}");
}

#[test]
fn third_period_delay_is_120_degrees() {
    let t = grid(6.0, 1e-3);
    let f = 1.7;
    let a: Vec<f64> = t.iter().map(|&t| (TAU * f * t).sin()).collect();
    let b: Vec<f64> = t.iter().map(|&t| (TAU * f * (t - 1.0 / (3.0 * f))).sin()).collect();
    let p = estimate_phase_shift(&t, &a, &b).unwrap();
    assert!((p - 120.0).abs() < 2.0, "{p}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frequency_scale_invariant(f in 0.5f64..5.0, k in 1e-3f64..1e4, harmonic in 0.0f64..0.5) {
        let t = grid(12.0, 1e-3);
        let x: Vec<f64> = t.iter().map(|&t| (TAU * f * t).sin() + harmonic * (3.0 * TAU * f * t).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * k).collect();
        let fx = estimate_frequency(&t, &x).unwrap().frequency;
        let fy = estimate_frequency(&t, &y).unwrap().frequency;
        prop_assert!((fx - fy).abs() <= 1e-9 * fx);
        prop_assert!((fx - f).abs() < 0.01 * f);
    }

    #[test]
    fn phase_antisymmetry(f in 0.8f64..4.0, frac in 0.0f64..1.0) {
        let t = grid(8.0, 1e-3);
        let a: Vec<f64> = t.iter().map(|&t| (TAU * f * t).sin()).collect();
        let b: Vec<f64> = t.iter().map(|&t| (TAU * f * t - TAU * frac).sin().powi(3)).collect();
        let ab = estimate_phase_shift(&t, &a, &b).unwrap();
        let ba = estimate_phase_shift(&t, &b, &a).unwrap();
        let sum = (ab + ba).rem_euclid(360.0);
        prop_assert!(sum.min(360.0 - sum) < 2.0, "{} + {}", ab, ba);
        let expected = 360.0 * frac;
        let d = (ab - expected).rem_euclid(360.0);
        prop_assert!(d.min(360.0 - d) < 2.0, "{} vs {}", ab, expected);
    }
}

// ---- locomotion ----

fn foot(left: usize, right: usize, orientation: Orientation) -> FootModel {
    FootModel {
        name: format!("F{left}{right}"),
        left,
        right,
        params: FootParams {
            orientation,
            ..FootParams::default()
        },
    }
}

/// Travelling-wave strains over `n` segments; `dir` = +1 moves toward
/// higher segment index.
fn wave(n: usize, freq: f64, t: &[f64], dir: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            t.iter()
                .map(|&t| 0.05 * (1.0 - (TAU * (freq * t - dir * k as f64 / 3.0)).cos()))
                .collect()
        })
        .collect()
}

fn refs(w: &[Vec<f64>]) -> Vec<&[f64]> {
    w.iter().map(Vec::as_slice).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planted_feet_never_slide_back(strains in prop::collection::vec((0.0f64..0.2, 0.0f64..0.2), 1..400)) {
        let params = FootParams::default();
        let mut state = FootState::default();
        let mut prev = state.position;
        for (l, r) in strains {
            let (_, contact) = foot_kinematics(l, r, &params, &mut state);
            if contact {
                prop_assert!(state.position >= prev);
            }
            prev = state.position;
        }
    }

    #[test]
    fn constant_strain_does_not_move(s in 0.0f64..0.2, n in 2usize..50) {
        let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let series = vec![s; n];
        let g = gait_from_strains(&t, &[&series, &series], &[foot(0, 1, Orientation::Forward)]).unwrap();
        prop_assert!(g.robot.iter().all(|&x| x == g.robot[0]));
    }
}

#[test]
fn time_compression_doubles_speed() {
    let t = grid(20.0, 1e-3);
    let feet = [foot(0, 1, Orientation::Forward), foot(1, 2, Orientation::Forward)];
    let slow = wave(3, 1.0, &t, 1.0);
    let fast = wave(3, 2.0, &t, 1.0);
    let v1 = speed(&gait_from_strains(&t, &refs(&slow), &feet).unwrap(), 5.0).unwrap();
    let v2 = speed(&gait_from_strains(&t, &refs(&fast), &feet).unwrap(), 5.0).unwrap();
    assert!((v2 / v1 - 2.0).abs() < 0.1, "{v1} {v2}");
}

#[test]
fn walking_direction_follows_feet_not_wave() {
    let t = grid(10.0, 1e-3);
    for orientation in [Orientation::Forward, Orientation::Reverse] {
        let feet = [foot(0, 1, orientation), foot(1, 2, orientation)];
        for dir in [1.0, -1.0] {
            let w = wave(3, 1.0, &t, dir);
            let g = gait_from_strains(&t, &refs(&w), &feet).unwrap();
            let v = speed(&g, 2.0).unwrap();
            assert_eq!(v.signum(), orientation.sign(), "{orientation:?} wave {dir}");
        }
    }
}

// ---- netlist ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(text in common::valid_netlist_text()) {
        let ast = parse(&text).unwrap();
        let printed = print_canonical(&ast);
        let again = parse(&printed).unwrap();
        prop_assert!(ast.structurally_eq(&again), "{}\n---\n{}", text, printed);
        prop_assert_eq!(print_canonical(&again), printed);
    }
}

// ---- initial state ----

#[test]
fn perturbations() {
    let m = trevor();
    let rest = initial_state(&m, &Perturbation::None).unwrap();
    assert!(rest.charges.iter().chain(&rest.strains).all(|&x| x == 0.0));

    let d = initial_state(&m, &Perturbation::default()).unwrap();
    assert!(d.charges[0] > 0.0 && d.charges[1..].iter().all(|&q| q == 0.0));
    let cref = m.actuators[0].membrane.reference_capacitance;
    assert!((d.charges[0] - 0.01 * cref * 3000.0).abs() < 1e-20);

    let j = Perturbation::Jitter {
        seed: 7,
        amplitude: 0.01,
    };
    assert_eq!(initial_state(&m, &j).unwrap(), initial_state(&m, &j).unwrap());
    let other = Perturbation::Jitter {
        seed: 8,
        amplitude: 0.01,
    };
    assert_ne!(initial_state(&m, &j).unwrap(), initial_state(&m, &other).unwrap());

    assert!(initial_state(&m, &Perturbation::Charges(vec![-1e-9, 0.0, 0.0, 0.0, 0.0, 0.0])).is_err());
    assert!(initial_state(
        &m,
        &Perturbation::Single {
            actuator: 0,
            fraction: 10.0
        }
    )
    .is_err());
    assert!(initial_state(
        &m,
        &Perturbation::Single {
            actuator: 9,
            fraction: 0.01
        }
    )
    .is_err());
}
