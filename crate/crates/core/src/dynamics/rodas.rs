//! Fourth-order L-stable Rosenbrock method of the Rodas family (gamma = 1/4)
//! with embedded error estimate and third-order dense output.
//! The systems integrated here are autonomous, so the time derivative term
//! of the method vanishes.

use nalgebra::{DMatrix, DVector};

use super::DynamicsError;

const GAM: f64 = 0.25;
const A21: f64 = 1.544;
const A31: f64 = 0.946_678_528_081_582_6;
const A32: f64 = 0.255_701_169_898_328_4;
const A41: f64 = 3.314_825_187_068_521;
const A42: f64 = 2.896_124_015_972_201;
const A43: f64 = 0.998_641_913_997_781_7;
const A51: f64 = 1.221_224_509_226_641;
const A52: f64 = 6.019_134_481_288_629;
const A53: f64 = 12.537_083_329_320_87;
const A54: f64 = -0.687_886_036_105_895;
const C21: f64 = -5.6688;
const C31: f64 = -2.430_093_356_833_875;
const C32: f64 = -0.206_359_915_709_191_5;
const C41: f64 = -0.107_352_905_815_137_5;
const C42: f64 = -9.594_562_251_023_355;
const C43: f64 = -20.470_286_148_096_16;
const C51: f64 = 7.496_443_313_967_647;
const C52: f64 = -10.246_804_314_643_52;
const C53: f64 = -33.999_903_528_199_05;
const C54: f64 = 11.708_908_932_061_6;
const C61: f64 = 8.083_246_795_921_522;
const C62: f64 = -7.981_132_988_064_893;
const C63: f64 = -31.521_594_328_743_71;
const C64: f64 = 16.319_305_431_231_36;
const C65: f64 = -6.058_818_238_834_054;
const D21: f64 = 10.126_235_083_445_86;
const D22: f64 = -7.487_995_877_610_167;
const D23: f64 = -34.800_918_615_557_47;
const D24: f64 = -7.992_771_707_568_823;
const D25: f64 = 1.025_137_723_295_662;
const D31: f64 = -0.676_280_339_280_125_3;
const D32: f64 = 6.087_714_651_680_015;
const D33: f64 = 16.430_843_208_924_78;
const D34: f64 = 24.767_225_114_183_86;
const D35: f64 = -6.594_389_125_716_872;

/// Consecutive non-finite trial steps tolerated before giving up.
const MAX_NAN_RETRIES: usize = 12;

#[derive(Debug, Clone)]
pub(crate) struct Options {
    pub rtol: f64,
    pub atol: Vec<f64>,
    pub max_step: f64,
    pub initial_step: f64,
    pub t_end: f64,
    pub max_steps: usize,
}

/// Cubic Hermite-like interpolant over one accepted step.
pub(crate) struct Dense {
    c1: DVector<f64>,
    c2: DVector<f64>,
    c3: DVector<f64>,
    c4: DVector<f64>,
}

impl Dense {
    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let b0 = 1.0 - theta;
        (0..self.c1.len())
            .map(|i| b0 * self.c1[i] + theta * (self.c2[i] + b0 * (self.c3[i] + theta * self.c4[i])))
            .collect()
    }
}

/// What an accepted step hands to the observer.
pub(crate) struct Accepted<'a> {
    pub t0: f64,
    pub h: f64,
    pub y: &'a [f64],
    pub error: &'a [f64],
    pub dense: &'a Dense,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Counters {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jacobians: usize,
}

struct Controller {
    first: bool,
    reject: bool,
    h_old: f64,
    err_old: f64,
}

impl Controller {
    /// Gustafsson predictive controller; returns whether the step is accepted
    /// and the next step size.
    fn success(&mut self, err: f64, h: f64) -> (bool, f64) {
        const SAFE: f64 = 0.9;
        const FAC1: f64 = 5.0;
        const FAC2: f64 = 1.0 / 6.0;
        let mut fac = (err.powf(0.25) / SAFE).clamp(FAC2, FAC1);
        let mut h_new = h / fac;
        if err <= 1.0 {
            if !self.first {
                let gus = ((self.h_old / h) * (err * err / self.err_old).powf(0.25) / SAFE).clamp(FAC2, FAC1);
                fac = fac.max(gus);
                h_new = h / fac;
            }
            self.first = false;
            self.h_old = h;
            self.err_old = err.max(1e-2);
            if self.reject {
                h_new = h_new.min(h);
            }
            self.reject = false;
            (true, h_new)
        } else {
            self.reject = true;
            (false, h_new)
        }
    }
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrate `y' = f(y)` from `t = 0` to `opts.t_end`.
pub(crate) fn integrate<F, O>(mut f: F, y0: Vec<f64>, opts: &Options, mut observe: O) -> Result<Counters, DynamicsError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), DynamicsError>,
    O: FnMut(Accepted<'_>) -> Result<(), DynamicsError>,
{
    let n = y0.len();
    let mut counters = Counters::default();
    let mut eval = |y: &DVector<f64>, counters: &mut Counters| -> Result<DVector<f64>, DynamicsError> {
        let mut out = vec![0.0; n];
        f(y.as_slice(), &mut out)?;
        counters.rhs_evals += 1;
        Ok(DVector::from_vec(out))
    };

    let mut t = 0.0;
    let mut y = DVector::from_vec(y0);
    let mut dydx = eval(&y, &mut counters)?;
    if !finite(&y) || !finite(&dydx) {
        return Err(DynamicsError::NonFinite {
            time: t,
            state: y.as_slice().to_vec(),
        });
    }
    let mut h = opts.initial_step.min(opts.max_step).min(opts.t_end);
    let mut ctrl = Controller {
        first: true,
        reject: false,
        h_old: h,
        err_old: 1.0,
    };
    let eps_sqrt = f64::EPSILON.sqrt();
    let typical: Vec<f64> = opts.atol.iter().map(|a| a / opts.rtol).collect();

    while t < opts.t_end {
        if counters.accepted >= opts.max_steps {
            return Err(DynamicsError::TooManySteps {
                time: t,
                steps: counters.accepted,
            });
        }

        // Finite-difference Jacobian at the current point.
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let delta = eps_sqrt * y[j].abs().max(typical[j]);
            let mut yp = y.clone();
            yp[j] += delta;
            let fp = eval(&yp, &mut counters)?;
            let col = (fp - &dydx) / delta;
            jac.set_column(j, &col);
        }
        counters.jacobians += 1;

        let mut nan_streak = 0;
        loop {
            h = h.min(opts.max_step);
            if t + h * 1.0001 >= opts.t_end {
                h = opts.t_end - t;
            }
            if h <= 0.0 || t + h == t || h < 1e-15 {
                return Err(DynamicsError::StepUnderflow {
                    time: t,
                    step: h,
                    state: y.as_slice().to_vec(),
                });
            }

            let trial = step(&mut eval, &mut counters, &y, &dydx, &jac, h)?;
            let Some((y_out, y_err, dense_k)) = trial.filter(|(yo, ye, _)| finite(yo) && finite(ye)) else {
                nan_streak += 1;
                counters.rejected += 1;
                if nan_streak > MAX_NAN_RETRIES {
                    return Err(DynamicsError::NonFinite {
                        time: t,
                        state: y.as_slice().to_vec(),
                    });
                }
                h *= 0.25;
                continue;
            };

            let mut sum = 0.0;
            for i in 0..n {
                let scale = opts.atol[i] + opts.rtol * y[i].abs().max(y_out[i].abs());
                let r = y_err[i] / scale;
                sum += r * r;
            }
            let err = (sum / n as f64).sqrt();
            let (ok, h_next) = ctrl.success(err, h);
            if !ok {
                counters.rejected += 1;
                h = h_next;
                continue;
            }

            let [k1, k2, k3, k4, k5] = dense_k;
            let dense = Dense {
                c1: y.clone(),
                c2: y_out.clone(),
                c3: &k1 * D21 + &k2 * D22 + &k3 * D23 + &k4 * D24 + &k5 * D25,
                c4: &k1 * D31 + &k2 * D32 + &k3 * D33 + &k4 * D34 + &k5 * D35,
            };
            let dydx_new = eval(&y_out, &mut counters)?;
            if !finite(&dydx_new) {
                nan_streak += 1;
                counters.rejected += 1;
                if nan_streak > MAX_NAN_RETRIES {
                    return Err(DynamicsError::NonFinite {
                        time: t + h,
                        state: y_out.as_slice().to_vec(),
                    });
                }
                h *= 0.25;
                continue;
            }
            counters.accepted += 1;
            observe(Accepted {
                t0: t,
                h,
                y: y_out.as_slice(),
                error: y_err.as_slice(),
                dense: &dense,
            })?;
            t = if t + h >= opts.t_end { opts.t_end } else { t + h };
            y = y_out;
            dydx = dydx_new;
            h = h_next;
            break;
        }
    }
    Ok(counters)
}

type Trial = Option<(DVector<f64>, DVector<f64>, [DVector<f64>; 5])>;

/// One Rosenbrock step of size `h`; `None` if the stage matrix is singular.
fn step<E>(
    eval: &mut E,
    counters: &mut Counters,
    y: &DVector<f64>,
    dydx: &DVector<f64>,
    jac: &DMatrix<f64>,
    h: f64,
) -> Result<Trial, DynamicsError>
where
    E: FnMut(&DVector<f64>, &mut Counters) -> Result<DVector<f64>, DynamicsError>,
{
    let n = y.len();
    let mut a = -jac.clone();
    for i in 0..n {
        a[(i, i)] += 1.0 / (GAM * h);
    }
    let lu = a.lu();
    let solve = |b: DVector<f64>| lu.solve(&b);

    let Some(k1) = solve(dydx.clone()) else { return Ok(None) };

    let yt = y + &k1 * A21;
    let f = eval(&yt, counters)?;
    let Some(k2) = solve(f + &k1 * (C21 / h)) else {
        return Ok(None);
    };

    let yt = y + &k1 * A31 + &k2 * A32;
    let f = eval(&yt, counters)?;
    let Some(k3) = solve(f + (&k1 * C31 + &k2 * C32) / h) else {
        return Ok(None);
    };

    let yt = y + &k1 * A41 + &k2 * A42 + &k3 * A43;
    let f = eval(&yt, counters)?;
    let Some(k4) = solve(f + (&k1 * C41 + &k2 * C42 + &k3 * C43) / h) else {
        return Ok(None);
    };

    let yt = y + &k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54;
    let f = eval(&yt, counters)?;
    let Some(k5) = solve(f + (&k1 * C51 + &k2 * C52 + &k3 * C53 + &k4 * C54) / h) else {
        return Ok(None);
    };

    let yt = yt + &k5;
    let f = eval(&yt, counters)?;
    let Some(err) = solve(f + (&k1 * C61 + &k2 * C62 + &k3 * C63 + &k4 * C64 + &k5 * C65) / h) else {
        return Ok(None);
    };
    let y_out = yt + &err;
    Ok(Some((y_out, err, [k1, k2, k3, k4, k5])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(t_end: f64, rtol: f64) -> Options {
        Options {
            rtol,
            atol: vec![1e-12; 2],
            max_step: 1.0,
            initial_step: 1e-4,
            t_end,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_decay() {
        let o = opts(2.0, 1e-8);
        let mut last = vec![];
        integrate(
            |y, dy| {
                dy[0] = -y[0];
                dy[1] = -1000.0 * (y[1] - y[0]);
                Ok(())
            },
            vec![1.0, 0.0],
            &o,
            |acc| {
                last = acc.y.to_vec();
                Ok(())
            },
        )
        .unwrap();
        let exact = (-2.0f64).exp();
        assert!((last[0] - exact).abs() < 1e-7 * exact);
    }

    #[test]
    fn dense_output_hits_endpoints() {
        let o = opts(1.0, 1e-9);
        let mut worst: f64 = 0.0;
        integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            vec![0.0, 1.0],
            &o,
            |acc| {
                for k in 0..=10 {
                    let theta = k as f64 / 10.0;
                    let v = acc.dense.eval(theta);
                    let t = acc.t0 + theta * acc.h;
                    worst = worst.max((v[0] - t.sin()).abs());
                }
                Ok(())
            },
        )
        .unwrap();
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn stiff_van_der_pol_completes() {
        let o = Options {
            atol: vec![1e-8; 2],
            ..opts(2.0, 1e-6)
        };
        let mu = 1e5;
        let c = integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = mu * ((1.0 - y[0] * y[0]) * y[1] - y[0]);
                Ok(())
            },
            vec![2.0, 0.0],
            &o,
            |_| Ok(()),
        )
        .unwrap();
        assert!(c.accepted < 20_000, "{c:?}");
    }

    #[test]
    fn nan_is_reported() {
        let o = opts(1.0, 1e-6);
        let r = integrate(
            |y, dy| {
                dy[0] = if y[0] > 1.5 { f64::NAN } else { 1.0 };
                dy[1] = 0.0;
                Ok(())
            },
            vec![1.0, 0.0],
            &o,
            |_| Ok(()),
        );
        assert!(matches!(
            r,
            Err(DynamicsError::NonFinite { .. }) | Err(DynamicsError::StepUnderflow { .. })
        ));
    }
}
