//! Kinematic stick-slip ratchet turning actuator strain into foot steps.
//!
//! Each foot is a compliant leg joining two neighbouring actuator segments.
//! When its trailing segment elongates past the engage threshold the leg
//! lifts and is carried forward; when that strain falls below the release
//! threshold the leg plants again. Friction keeps a planted foot from moving
//! backward, so the walking direction is fixed by the leg orientation.

use thiserror::Error;

use crate::dynamics::Trace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocomotionError {
    #[error("invalid foot parameters: {0}")]
    InvalidParams(String),
    #[error("trace has no strain series for actuator index {0}")]
    MissingStrain(usize),
    #[error("speed window needs at least {needed} samples, got {got}")]
    WindowTooShort { needed: usize, got: usize },
}

/// Which neighbour drives the foot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Trailing actuator on the left; steps go toward +x.
    #[default]
    Forward,
    /// Trailing actuator on the right; steps go toward -x.
    Reverse,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Reverse => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Forward => "fwd",
            Orientation::Reverse => "rev",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fwd" => Some(Orientation::Forward),
            "rev" => Some(Orientation::Reverse),
            _ => None,
        }
    }
}

/// Leg geometry and ratchet thresholds. The defaults are uncalibrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootParams {
    /// Segment rest length, m.
    pub rest_length: f64,
    /// Fraction of segment elongation converted into a step.
    pub stride_gain: f64,
    pub engage_strain: f64,
    pub release_strain: f64,
    pub orientation: Orientation,
}

impl Default for FootParams {
    fn default() -> Self {
        FootParams {
            rest_length: 0.015,
            stride_gain: 0.5,
            engage_strain: 0.04,
            release_strain: 0.02,
            orientation: Orientation::Forward,
        }
    }
}

impl FootParams {
    pub fn validate(&self) -> Result<(), LocomotionError> {
        let bad = |m: String| Err(LocomotionError::InvalidParams(m));
        if !(self.rest_length.is_finite() && self.rest_length > 0.0) {
            return bad(format!("rest length must be positive, got {}", self.rest_length));
        }
        if !(self.stride_gain > 0.0 && self.stride_gain <= 1.0) {
            return bad(format!("stride gain must lie in (0, 1], got {}", self.stride_gain));
        }
        if !(self.release_strain.is_finite() && self.release_strain >= 0.0) {
            return bad(format!("release threshold must be >= 0, got {}", self.release_strain));
        }
        if !(self.engage_strain.is_finite() && self.engage_strain > self.release_strain) {
            return bad(format!(
                "engage threshold ({}) must exceed release threshold ({})",
                self.engage_strain, self.release_strain
            ));
        }
        Ok(())
    }

    /// Step produced by one engage/release cycle peaking at `peak_strain`.
    /// Areal strain `s` stretches the segment by `sqrt(1 + s)`.
    pub fn stride(&self, peak_strain: f64) -> f64 {
        self.stride_gain * self.rest_length * ((1.0 + peak_strain.max(0.0)).sqrt() - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootModel {
    pub name: String,
    /// Actuator index on the left of the leg.
    pub left: usize,
    /// Actuator index on the right of the leg.
    pub right: usize,
    pub params: FootParams,
}

impl FootModel {
    /// Actuator whose elongation carries this foot.
    pub fn trailing(&self) -> usize {
        match self.params.orientation {
            Orientation::Forward => self.left,
            Orientation::Reverse => self.right,
        }
    }
}

/// Ratchet state carried from sample to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootState {
    pub position: f64,
    pub contact: bool,
    /// Position where the foot last planted.
    anchor: f64,
    /// Largest trailing strain since lift-off.
    swing_peak: f64,
}

impl FootState {
    pub fn planted_at(position: f64) -> Self {
        FootState {
            position,
            contact: true,
            anchor: position,
            swing_peak: 0.0,
        }
    }
}

impl Default for FootState {
    fn default() -> Self {
        FootState::planted_at(0.0)
    }
}

/// Advance one foot by one sample. Returns the displacement over the sample
/// and the contact flag afterwards.
pub fn foot_kinematics(strain_left: f64, strain_right: f64, params: &FootParams, state: &mut FootState) -> (f64, bool) {
    let trailing = match params.orientation {
        Orientation::Forward => strain_left,
        Orientation::Reverse => strain_right,
    };
    let before = state.position;
    if state.contact {
        if trailing >= params.engage_strain {
            state.contact = false;
            state.swing_peak = trailing;
        }
    } else if trailing <= params.release_strain {
        state.contact = true;
        state.anchor = state.position;
        state.swing_peak = 0.0;
    } else {
        state.swing_peak = state.swing_peak.max(trailing);
    }
    if !state.contact {
        state.position = state.anchor + params.orientation.sign() * params.stride(state.swing_peak);
    }
    (state.position - before, state.contact)
}

/// Per-sample foot positions and robot position.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrace {
    pub times: Vec<f64>,
    pub foot_names: Vec<String>,
    /// `feet[k][i]`: position of foot `k` at sample `i`.
    pub feet: Vec<Vec<f64>>,
    pub contact: Vec<Vec<bool>>,
    /// Mean of foot positions.
    pub robot: Vec<f64>,
}

impl GaitTrace {
    /// CSV with header `t,x_robot,x_foot_1..N,contact_1..N`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let n = self.feet.len();
        let mut out = String::from("t,x_robot");
        for k in 1..=n {
            let _ = write!(out, ",x_foot_{k}");
        }
        for k in 1..=n {
            let _ = write!(out, ",contact_{k}");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t},{}", self.robot[i]);
            for foot in &self.feet {
                let _ = write!(out, ",{}", foot[i]);
            }
            for c in &self.contact {
                out.push_str(if c[i] { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

/// Run every foot's ratchet over the strain series of a trace.
pub fn simulate_gait(trace: &Trace, feet: &[FootModel]) -> Result<GaitTrace, LocomotionError> {
    let strains: Vec<&[f64]> = (0..trace.strains.len()).map(|i| trace.strains[i].as_slice()).collect();
    gait_from_strains(&trace.times, &strains, feet)
}

/// Same as [`simulate_gait`] over bare strain series indexed by actuator.
pub fn gait_from_strains(times: &[f64], strains: &[&[f64]], feet: &[FootModel]) -> Result<GaitTrace, LocomotionError> {
    for foot in feet {
        foot.params.validate()?;
        for idx in [foot.left, foot.right] {
            if idx >= strains.len() || strains[idx].len() != times.len() {
                return Err(LocomotionError::MissingStrain(idx));
            }
        }
    }
    let n = times.len();
    let mut positions = vec![Vec::with_capacity(n); feet.len()];
    let mut contact = vec![Vec::with_capacity(n); feet.len()];
    for (k, foot) in feet.iter().enumerate() {
        let mut state = FootState::default();
        let (left, right) = (strains[foot.left], strains[foot.right]);
        for i in 0..n {
            let (_, planted) = foot_kinematics(left[i], right[i], &foot.params, &mut state);
            positions[k].push(state.position);
            contact[k].push(planted);
        }
    }
    let robot = (0..n)
        .map(|i| {
            if feet.is_empty() {
                0.0
            } else {
                positions.iter().map(|p| p[i]).sum::<f64>() / feet.len() as f64
            }
        })
        .collect();
    Ok(GaitTrace {
        times: times.to_vec(),
        foot_names: feet.iter().map(|f| f.name.clone()).collect(),
        feet: positions,
        contact,
        robot,
    })
}

/// Least-squares slope of robot position over samples with `t >= t_start`.
pub fn speed(gait: &GaitTrace, t_start: f64) -> Result<f64, LocomotionError> {
    let (t, x): (Vec<f64>, Vec<f64>) = gait
        .times
        .iter()
        .zip(&gait.robot)
        .filter(|(t, _)| **t >= t_start)
        .map(|(t, x)| (*t, *x))
        .unzip();
    if t.len() < 3 {
        return Err(LocomotionError::WindowTooShort {
            needed: 3,
            got: t.len(),
        });
    }
    Ok(least_squares_slope(&t, &x))
}

pub(crate) fn least_squares_slope(t: &[f64], x: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (ti, xi) in t.iter().zip(x) {
        num += (ti - tm) * (xi - xm);
        den += (ti - tm) * (ti - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
