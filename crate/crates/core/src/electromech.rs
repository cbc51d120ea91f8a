//! Lumped component laws for a pre-stretched dielectric elastomer membrane.
//!
//! The membrane is modeled as an equibiaxially stretched neo-Hookean sheet
//! held by a dead load at its pre-stretch. Actuation strain `s` is the areal
//! strain relative to the pre-stretched rest area, so the in-plane stretch is
//! `lambda = lambda_pre * sqrt(1 + s)` and, by incompressibility, the
//! thickness is `d0 / lambda^2`.

use thiserror::Error;

/// Vacuum permittivity in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Default active electrode area (pre-stretched state), m^2.
pub const DEFAULT_AREA: f64 = 4.0e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElectromechError {
    #[error("invalid {what}: {value}")]
    InvalidInput { what: &'static str, value: f64 },
    #[error("invalid membrane parameters: {0}")]
    InvalidParams(String),
    #[error("invalid switch curve: {0}")]
    InvalidCurve(String),
    #[error("electromechanical instability: {voltage} V exceeds the pull-in voltage {pull_in_voltage} V")]
    PullIn { voltage: f64, pull_in_voltage: f64 },
}

pub type Result<T> = std::result::Result<T, ElectromechError>;

fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ElectromechError::InvalidInput { what, value })
    }
}

fn non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ElectromechError::InvalidInput { what, value })
    }
}

/// Material and geometry constants of one pre-stretched membrane actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneParams {
    pub relative_permittivity: f64,
    /// F/m
    pub vacuum_permittivity: f64,
    /// Thickness before pre-stretch, m.
    pub unstrained_thickness: f64,
    /// Equibiaxial pre-stretch ratio.
    pub pre_stretch: f64,
    /// Effective neo-Hookean shear modulus, Pa. Lumps the frame and the
    /// passive membrane around the electrode into one stiffness.
    pub shear_modulus: f64,
    /// Single viscoelastic relaxation time, s.
    pub viscoelastic_time_constant: f64,
    /// Capacitance at zero actuation strain and zero voltage, F.
    pub reference_capacitance: f64,
    /// Upper bound on actuation strain; the simulator clamps here.
    pub max_strain: f64,
}

impl Default for MembraneParams {
    fn default() -> Self {
        let mut params = MembraneParams {
            relative_permittivity: 4.7,
            vacuum_permittivity: VACUUM_PERMITTIVITY,
            unstrained_thickness: 0.5e-3,
            pre_stretch: 294.0 / 85.0,
            shear_modulus: 3.3e5,
            viscoelastic_time_constant: 0.05,
            reference_capacitance: 0.0,
            max_strain: 3.0,
        };
        params.reference_capacitance = params.plate_capacitance(DEFAULT_AREA);
        params
    }
}

impl MembraneParams {
    /// Membrane thickness at the pre-stretch, `d0 / lambda_pre^2`.
    pub fn prestretched_thickness(&self) -> f64 {
        self.unstrained_thickness / (self.pre_stretch * self.pre_stretch)
    }

    pub fn permittivity(&self) -> f64 {
        self.relative_permittivity * self.vacuum_permittivity
    }

    /// Parallel-plate capacitance of an electrode of pre-stretched `area`.
    pub fn plate_capacitance(&self, area: f64) -> f64 {
        self.permittivity() * area / self.prestretched_thickness()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("relative_permittivity", self.relative_permittivity),
            ("vacuum_permittivity", self.vacuum_permittivity),
            ("unstrained_thickness", self.unstrained_thickness),
            ("pre_stretch", self.pre_stretch),
            ("shear_modulus", self.shear_modulus),
            ("viscoelastic_time_constant", self.viscoelastic_time_constant),
            ("reference_capacitance", self.reference_capacitance),
            ("max_strain", self.max_strain),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ElectromechError::InvalidParams(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.pre_stretch < 1.0 {
            return Err(ElectromechError::InvalidParams(format!(
                "pre_stretch must be >= 1, got {}",
                self.pre_stretch
            )));
        }
        Ok(())
    }
}

/// `C_ref * (1 + s)^2`: plate capacitance with constant membrane volume.
pub fn capacitance(strain: f64, params: &MembraneParams) -> Result<f64> {
    non_negative("actuation strain", strain)?;
    finite("reference capacitance", params.reference_capacitance)?;
    Ok(capacitance_unchecked(strain, params.reference_capacitance))
}

#[inline]
pub(crate) fn capacitance_unchecked(strain: f64, reference_capacitance: f64) -> f64 {
    let a = 1.0 + strain;
    reference_capacitance * a * a
}

/// Derivative of [`capacitance`] with respect to strain.
#[inline]
pub(crate) fn capacitance_slope(strain: f64, reference_capacitance: f64) -> f64 {
    2.0 * reference_capacitance * (1.0 + strain)
}

/// Precomputed stress balance of one membrane.
///
/// In units of the shear modulus the balance reads
/// `G(lambda) = eps V^2 / (mu d0^2)` with
/// `G(lambda) = lambda^-2 - lambda^-8 - p lambda^-3` and
/// `p = lambda_pre - lambda_pre^-5`. `G` rises from zero at the pre-stretch
/// to a maximum at the pull-in stretch; beyond that no equilibrium exists.
#[derive(Debug, Clone, Copy)]
pub struct Membrane {
    params: MembraneParams,
    load: f64,
    /// eps / (mu d0^2), per V^2
    voltage_scale: f64,
    pull_in_stretch: f64,
    pull_in_level: f64,
}

impl Membrane {
    pub fn new(params: MembraneParams) -> Result<Self> {
        params.validate()?;
        let lp = params.pre_stretch;
        let load = lp - lp.powi(-5);
        let d0 = params.unstrained_thickness;
        let voltage_scale = params.permittivity() / (params.shear_modulus * d0 * d0);
        let pull_in_stretch = pull_in_stretch(load, lp);
        let pull_in_level = balance(pull_in_stretch, load);
        Ok(Membrane {
            params,
            load,
            voltage_scale,
            pull_in_stretch,
            pull_in_level,
        })
    }

    pub fn params(&self) -> &MembraneParams {
        &self.params
    }

    /// Voltage at which the stable equilibrium branch ends.
    pub fn pull_in_voltage(&self) -> f64 {
        (self.pull_in_level / self.voltage_scale).sqrt()
    }

    /// Actuation strain at the pull-in point.
    pub fn pull_in_strain(&self) -> f64 {
        self.strain_of(self.pull_in_stretch)
    }

    fn strain_of(&self, stretch: f64) -> f64 {
        let r = stretch / self.params.pre_stretch;
        r * r - 1.0
    }

    /// `k_em` in `s ~ k_em v^2`, from the Taylor expansion of the balance at
    /// zero voltage.
    pub fn linear_gain(&self) -> f64 {
        let lp = self.params.pre_stretch;
        2.0 * self.voltage_scale / (lp * balance_slope(lp, self.load))
    }

    /// Small-signal approximation `k_em v^2`, clamped at the strain bound.
    pub fn linearized_strain(&self, voltage: f64) -> Result<f64> {
        finite("voltage", voltage)?;
        Ok((self.linear_gain() * voltage * voltage).min(self.params.max_strain))
    }

    /// Steady-state actuation strain under a constant voltage. The sign of
    /// the voltage is irrelevant since Maxwell stress goes with `V^2`.
    pub fn equilibrium_strain(&self, voltage: f64) -> Result<f64> {
        finite("voltage", voltage)?;
        if voltage == 0.0 {
            return Ok(0.0);
        }
        let target = self.voltage_scale * voltage * voltage;
        if target > self.pull_in_level {
            return Err(ElectromechError::PullIn {
                voltage: voltage.abs(),
                pull_in_voltage: self.pull_in_voltage(),
            });
        }
        let stretch = self.solve_stretch(target);
        Ok(self.strain_of(stretch).clamp(0.0, self.params.max_strain))
    }

    /// Like [`Self::equilibrium_strain`] but beyond pull-in the strain bound is
    /// returned. The boolean reports whether clamping happened.
    pub(crate) fn equilibrium_strain_clamped(&self, voltage: f64) -> (f64, bool) {
        match self.equilibrium_strain(voltage) {
            Ok(s) => (s, false),
            Err(_) => (self.params.max_strain, true),
        }
    }

    /// Safeguarded Newton on `G(lambda) = target` inside
    /// `[lambda_pre, lambda_pull]`, where `G` is strictly increasing.
    fn solve_stretch(&self, target: f64) -> f64 {
        let lp = self.params.pre_stretch;
        let mut lo = lp;
        let mut hi = self.pull_in_stretch;
        let slope0 = balance_slope(lp, self.load);
        let mut x = (lp + target / slope0).clamp(lo, hi);
        for _ in 0..100 {
            let f = balance(x, self.load) - target;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = balance_slope(x, self.load);
            let mut next = x - f / d;
            if !(next > lo && next < hi) || d <= 0.0 {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
                return next;
            }
            x = next;
        }
        x
    }
}

/// `G(lambda)`, the elastic stress balance normalized by the shear modulus.
#[inline]
fn balance(stretch: f64, load: f64) -> f64 {
    let inv = 1.0 / stretch;
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    let inv8 = inv2 * inv3 * inv3;
    inv2 - inv8 - load * inv3
}

#[inline]
fn balance_slope(stretch: f64, load: f64) -> f64 {
    let inv = 1.0 / stretch;
    let inv3 = inv * inv * inv;
    let inv4 = inv3 * inv;
    let inv9 = inv3 * inv3 * inv3;
    -2.0 * inv3 + 8.0 * inv9 + 3.0 * load * inv4
}

/// Root of `2 lambda^6 - 3 p lambda^5 - 8 = 0` above the pre-stretch, where
/// `G` peaks.
fn pull_in_stretch(load: f64, pre_stretch: f64) -> f64 {
    let phi = |x: f64| 2.0 * x.powi(6) - 3.0 * load * x.powi(5) - 8.0;
    let mut lo = pre_stretch;
    let mut hi = 1.5 * load + 2.0;
    debug_assert!(phi(lo) < 0.0 && phi(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Steady-state areal actuation strain at constant voltage.
pub fn equilibrium_strain(voltage: f64, params: &MembraneParams) -> Result<f64> {
    Membrane::new(*params)?.equilibrium_strain(voltage)
}

/// Small-signal strain `k_em v^2`.
pub fn linearized_strain(voltage: f64, params: &MembraneParams) -> Result<f64> {
    Membrane::new(*params)?.linearized_strain(voltage)
}

/// First-order viscoelastic relaxation toward the electrostatic equilibrium.
pub fn strain_rate(strain: f64, voltage: f64, params: &MembraneParams) -> Result<f64> {
    non_negative("actuation strain", strain)?;
    let target = equilibrium_strain(voltage, params)?;
    Ok((target - strain) / params.viscoelastic_time_constant)
}

/// Piezoresistance law of a dielectric elastomer switch.
///
/// `log10(R)` moves from `log10(r_off)` to `log10(r_on)` along a logistic in
/// the coupled actuator's strain, centered on `threshold_actuation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesCurve {
    pub r_off: f64,
    pub r_on: f64,
    pub threshold_actuation: f64,
    pub steepness: f64,
}

impl Default for DesCurve {
    fn default() -> Self {
        DesCurve {
            r_off: 1.0e12,
            r_on: 2.0e6,
            threshold_actuation: 0.03,
            steepness: 300.0,
        }
    }
}

/// Minimum `r_off / r_on` for a usable switch.
pub const MIN_SWITCH_RATIO: f64 = 1.0e5;

impl DesCurve {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ElectromechError::InvalidCurve(msg));
        for (name, v) in [
            ("r_off", self.r_off),
            ("r_on", self.r_on),
            ("threshold_actuation", self.threshold_actuation),
            ("steepness", self.steepness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if self.r_off <= self.r_on {
            return bad(format!("r_off ({}) must exceed r_on ({})", self.r_off, self.r_on));
        }
        if self.r_off / self.r_on < MIN_SWITCH_RATIO {
            return bad(format!(
                "r_off/r_on = {:.3e} is below the minimum switching ratio {:.0e}",
                self.r_off / self.r_on,
                MIN_SWITCH_RATIO
            ));
        }
        // the relaxed switch must sit within 1% of r_off
        if self.resistance_unchecked(0.0) < 0.99 * self.r_off {
            return bad(format!(
                "switch is not off at rest: threshold*steepness = {:.3} is too small",
                self.threshold_actuation * self.steepness
            ));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn resistance_unchecked(&self, strain: f64) -> f64 {
        let hi = self.r_off.log10();
        let lo = self.r_on.log10();
        let x = self.steepness * (strain - self.threshold_actuation);
        // logistic(-x), written to stay finite for large |x|
        let off_fraction = if x >= 0.0 {
            let e = (-x).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + x.exp())
        };
        10f64.powf(lo + (hi - lo) * off_fraction)
    }
}

/// Switch resistance for the coupled actuator's strain.
pub fn des_resistance(coupled_strain: f64, curve: &DesCurve) -> Result<f64> {
    non_negative("coupled strain", coupled_strain)?;
    Ok(curve.resistance_unchecked(coupled_strain))
}

/// Steady-state output of a dielectric inverter: a divider of the series
/// resistor and the switch whose actuator sees `v_in`.
pub fn inverter_static_output(
    v_in: f64,
    r_series: f64,
    v_supply: f64,
    curve: &DesCurve,
    params: &MembraneParams,
) -> Result<f64> {
    non_negative("input voltage", v_in)?;
    non_negative("supply voltage", v_supply)?;
    if !(r_series.is_finite() && r_series > 0.0) {
        return Err(ElectromechError::InvalidInput {
            what: "series resistance",
            value: r_series,
        });
    }
    let strain = equilibrium_strain(v_in, params)?;
    let r_des = des_resistance(strain, curve)?;
    Ok(v_supply * r_des / (r_des + r_series))
}
