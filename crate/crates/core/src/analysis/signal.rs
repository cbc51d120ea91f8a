//! Crossing-based frequency, cross-correlation phase and cycle amplitudes
//! of sampled waveforms.

use super::AnalysisError;

/// Hysteresis half-width as a fraction of the peak-to-peak amplitude.
pub const HYSTERESIS: f64 = 0.05;
/// Minimum rising crossings for a frequency estimate.
pub const MIN_CROSSINGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyEstimate {
    pub frequency: f64,
    /// Mean period, s.
    pub period: f64,
    /// Standard deviation of the individual periods, s.
    pub period_std: f64,
    pub crossings: usize,
}

/// Mean and peak-to-peak amplitude.
pub(crate) fn level(series: &[f64]) -> (f64, f64) {
    let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    (mean, if series.is_empty() { 0.0 } else { hi - lo })
}

/// Times of rising midline crossings. A crossing only counts after the
/// signal has been below `mid - band` and is confirmed once it exceeds
/// `mid + band`; the reported time interpolates the last midline crossing
/// before confirmation.
pub fn rising_crossings(times: &[f64], series: &[f64], mid: f64, band: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut armed = false;
    let mut last_cross: Option<f64> = None;
    for i in 0..series.len() {
        let x = series[i];
        if x < mid - band {
            armed = true;
            last_cross = None;
        }
        if i > 0 && series[i - 1] < mid && x >= mid {
            let frac = (mid - series[i - 1]) / (x - series[i - 1]);
            last_cross = Some(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
        if armed && x > mid + band {
            if let Some(t) = last_cross {
                out.push(t);
            }
            armed = false;
            last_cross = None;
        }
    }
    out
}

/// Frequency from hysteresis-thresholded midline crossings: the mean of the
/// reciprocal periods, with the period spread reported alongside.
pub fn estimate_frequency(times: &[f64], series: &[f64]) -> Result<FrequencyEstimate, AnalysisError> {
    if times.len() != series.len() {
        return Err(AnalysisError::LengthMismatch {
            left: times.len(),
            right: series.len(),
        });
    }
    let (mean, amp) = level(series);
    let crossings = if amp > 0.0 && amp.is_finite() {
        rising_crossings(times, series, mean, HYSTERESIS * amp)
    } else {
        Vec::new()
    };
    if crossings.len() < MIN_CROSSINGS {
        return Err(AnalysisError::InsufficientCycles {
            found: crossings.len(),
            needed: MIN_CROSSINGS,
        });
    }
    let periods: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let n = periods.len() as f64;
    let frequency = periods.iter().map(|p| 1.0 / p).sum::<f64>() / n;
    let period = periods.iter().sum::<f64>() / n;
    let var = periods.iter().map(|p| (p - period).powi(2)).sum::<f64>() / n;
    Ok(FrequencyEstimate {
        frequency,
        period,
        period_std: var.sqrt(),
        crossings: crossings.len(),
    })
}

/// Delay of `b` behind `a` in degrees, in `[0, 360)`, from the argmax of the
/// cross-correlation over lags spanning one period. Both series must share
/// the sample times and oscillate within 2% of a common frequency.
pub fn estimate_phase_shift(times: &[f64], a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() || a.len() != times.len() {
        return Err(AnalysisError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let fa = estimate_frequency(times, a)?;
    let fb = estimate_frequency(times, b)?;
    let rel = (fa.frequency - fb.frequency).abs() / fa.frequency.max(fb.frequency);
    if rel > 0.02 {
        return Err(AnalysisError::FrequencyMismatch {
            a: fa.frequency,
            b: fb.frequency,
        });
    }
    let period = 2.0 / (fa.frequency + fb.frequency);
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let lags = (period / dt).round() as usize;
    let n = a.len();
    if lags < 3 || n < lags + 8 {
        return Err(AnalysisError::WindowTooShort);
    }
    let (ma, _) = level(a);
    let (mb, _) = level(b);
    let i0 = 1;
    // Correlate over whole periods only.
    let span = n - lags - 3;
    let cycles = ((span as f64 * dt) / period).floor();
    let len = if cycles >= 1.0 {
        ((cycles * period / dt).round() as usize).min(span)
    } else {
        span
    };
    // corr[k] holds lag k - 1, so lags -1 ..= lags + 1 are available.
    let corr: Vec<f64> = (0..lags + 3)
        .map(|k| (i0..i0 + len).map(|i| (a[i] - ma) * (b[i + k - 1] - mb)).sum::<f64>())
        .collect();
    let mut best = 1;
    for k in 1..=lags {
        if corr[k] > corr[best] {
            best = k;
        }
    }
    let (l, c, r) = (corr[best - 1], corr[best], corr[best + 1]);
    let denom = l - 2.0 * c + r;
    let offset = if denom < 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    let lag = (best as f64 - 1.0 + offset) * dt;
    Ok((360.0 * lag / period).rem_euclid(360.0))
}

/// Peak-to-peak amplitude of each cycle between consecutive rising
/// crossings, with the cycle start times.
pub fn cycle_amplitudes(times: &[f64], series: &[f64], mid: f64, band: f64) -> (Vec<f64>, Vec<f64>) {
    let crossings = rising_crossings(times, series, mid, band);
    let mut starts = Vec::new();
    let mut amps = Vec::new();
    for w in crossings.windows(2) {
        let i0 = times.partition_point(|&t| t < w[0]);
        let i1 = times.partition_point(|&t| t < w[1]);
        let (_, amp) = level(&series[i0..i1]);
        starts.push(w[0]);
        amps.push(amp);
    }
    (starts, amps)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Where the per-cycle amplitudes stop drifting.
#[derive(Debug, Clone, PartialEq)]
pub struct Settling {
    /// Settling time, s; the end of the series if it never settles.
    pub time: f64,
    pub settled: bool,
    /// Cycles from the settling point on.
    pub cycles: usize,
    /// Median post-settling peak-to-peak amplitude.
    pub amplitude: f64,
    /// Largest relative deviation of a post-settling cycle from the median.
    pub variation: f64,
}

/// Earliest time after which every cycle's peak-to-peak amplitude is within
/// `tolerance` of the median of those cycles. The midline and hysteresis
/// band come from the second half of the series. A series that qualifies
/// from a cycle starting within one period of its first sample settles at
/// that sample.
pub fn detect_settling(times: &[f64], series: &[f64], tolerance: f64) -> Settling {
    let end = times.last().copied().unwrap_or(0.0);
    let never = Settling {
        time: end,
        settled: false,
        cycles: 0,
        amplitude: 0.0,
        variation: f64::INFINITY,
    };
    if series.len() < 4 {
        return never;
    }
    let (mid, amp) = level(&series[series.len() / 2..]);
    if !(amp > 0.0 && amp.is_finite()) {
        return never;
    }
    let (starts, amps) = cycle_amplitudes(times, series, mid, HYSTERESIS * amp);
    if amps.len() < 2 {
        return never;
    }
    // Scan from the back: extend the suffix while it stays within tolerance.
    let mut first = amps.len() - 1;
    let mut variation = 0.0;
    for k in (0..amps.len() - 1).rev() {
        let med = median(&amps[k..]);
        let worst = amps[k..].iter().map(|a| (a - med).abs() / med).fold(0.0, f64::max);
        if worst < tolerance {
            first = k;
            variation = worst;
        }
    }
    if first == amps.len() - 1 {
        return never;
    }
    let amplitude = median(&amps[first..]);
    Settling {
        time: if first == 0 && starts[0] - times[0] <= starts[1] - starts[0] {
            times[0]
        } else {
            starts[first]
        },
        settled: true,
        cycles: amps.len() - first,
        amplitude,
        variation,
    }
}
