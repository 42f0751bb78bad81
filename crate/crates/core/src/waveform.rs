//! Signal primitives: pulse synthesis, first-arrival picking,
//! cross-correlation delay and Pearson correlation.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

const MODULE: &str = "waveform";

/// Default first-break threshold as a fraction of the peak absolute amplitude.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.1;

/// Uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    samples: Vec<f64>,
}

impl Trace {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(param(MODULE, "sample period must be positive"));
        }
        if samples.len() < 2 {
            return Err(param(MODULE, "a trace needs at least two samples"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(param(MODULE, format!("sample {i} is not finite")));
        }
        Ok(Self { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Leading part of the trace up to and including time `t_end`.
    pub fn truncated(&self, t_end: f64) -> Result<Trace> {
        let n = ((t_end / self.dt).floor() as usize + 1).min(self.samples.len());
        Trace::new(self.dt, self.samples[..n].to_vec())
    }

    /// Centered moving average over `2 * half_width + 1` samples (zero phase).
    pub fn smoothed(&self, half_width: usize) -> Trace {
        if half_width == 0 {
            return self.clone();
        }
        let n = self.samples.len();
        let out = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half_width);
                let hi = (i + half_width).min(n - 1);
                self.samples[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        Trace {
            dt: self.dt,
            samples: out,
        }
    }
}

/// Hanning-windowed tone burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Hz
    pub center_frequency: f64,
    pub n_cycles: u32,
    pub amplitude: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            center_frequency: 500e3,
            n_cycles: 3,
            amplitude: 1.0,
        }
    }
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency > 0.0) {
            return Err(param(MODULE, "center frequency must be positive"));
        }
        if self.n_cycles < 1 {
            return Err(param(MODULE, "at least one cycle is required"));
        }
        if !self.amplitude.is_finite() {
            return Err(param(MODULE, "amplitude must be finite"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.n_cycles as f64 / self.center_frequency
    }

    /// s(t) = A · ½(1 − cos(2πt/T)) · sin(2πf₀t) on [0, T], zero elsewhere.
    pub fn value(&self, t: f64) -> f64 {
        let period = self.duration();
        if t <= 0.0 || t >= period {
            return 0.0;
        }
        let window = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * t / period).cos());
        self.amplitude * window * (2.0 * std::f64::consts::PI * self.center_frequency * t).sin()
    }
}

/// Samples the pulse at `i·dt` over `[0, T]`, ending on a zero sample.
pub fn hanning_pulse(spec: &PulseSpec, dt: f64) -> Result<Trace> {
    spec.validate()?;
    if !(dt > 0.0) || dt >= 1.0 / (20.0 * spec.center_frequency) {
        return Err(param(MODULE, "sampling too coarse: need dt < 1/(20 f0)"));
    }
    let n = (spec.duration() / dt).ceil() as usize + 1;
    Trace::new(dt, (0..n).map(|i| spec.value(i as f64 * dt)).collect())
}

/// First time |s| exceeds an absolute level, linearly interpolated.
pub fn first_crossing(trace: &Trace, level: f64) -> Result<f64> {
    if !(level > 0.0) {
        return Err(param(MODULE, "crossing level must be positive"));
    }
    let s = &trace.samples;
    let i = s
        .iter()
        .position(|v| v.abs() > level)
        .ok_or_else(|| Error::NoArrival(format!("signal never exceeds {level:e}")))?;
    if i == 0 {
        return Ok(0.0);
    }
    let (a, b) = (s[i - 1].abs(), s[i].abs());
    let frac = if b > a {
        ((level - a) / (b - a)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(((i - 1) as f64 + frac) * trace.dt)
}

/// Earliest time |s| exceeds `threshold_fraction × max|s|`.
pub fn pick_first_arrival(trace: &Trace, threshold_fraction: f64) -> Result<f64> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(param(MODULE, "threshold fraction must lie in (0, 1)"));
    }
    let peak = trace.peak_abs();
    if peak == 0.0 {
        return Err(Error::NoArrival("trace is identically zero".into()));
    }
    first_crossing(trace, threshold_fraction * peak)
}

/// Lag of `b` relative to `a` in seconds: b(t) ≈ ±a(t − lag).
///
/// Maximises the magnitude of the discrete cross-correlation and refines the
/// peak with a three-point parabola.
pub fn cross_correlation_delay(a: &Trace, b: &Trace) -> Result<f64> {
    if (a.dt - b.dt).abs() > 1e-12 * a.dt.max(b.dt) {
        return Err(param(MODULE, "traces must share a sample period"));
    }
    let is_constant = |t: &Trace| t.samples.iter().all(|&v| v == t.samples[0]);
    if is_constant(a) || is_constant(b) {
        return Err(Error::UndefinedDelay("constant input".into()));
    }
    let (xa, xb) = (&a.samples, &b.samples);
    let (na, nb) = (xa.len() as isize, xb.len() as isize);
    // r[k] = Σ_i a[i]·b[i + k], k ∈ [−(na−1), nb−1]
    let corr = |k: isize| -> f64 {
        let lo = 0.max(-k);
        let hi = na.min(nb - k);
        (lo..hi)
            .map(|i| xa[i as usize] * xb[(i + k) as usize])
            .sum::<f64>()
            .abs()
    };
    let lags: Vec<f64> = (-(na - 1)..nb).map(corr).collect();
    let (best, peak) =
        lags.iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
    if peak == 0.0 {
        return Err(Error::UndefinedDelay("traces do not overlap".into()));
    }
    let mut shift = 0.0;
    if best > 0 && best + 1 < lags.len() {
        let (ym, y0, yp) = (lags[best - 1], lags[best], lags[best + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if denom < 0.0 {
            shift = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
        }
    }
    let k = best as isize - (na - 1);
    Ok((k as f64 + shift) * a.dt)
}

/// Product-moment correlation coefficient (two-pass).
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(param(MODULE, "series lengths differ"));
    }
    if x.len() < 2 {
        return Err(param(MODULE, "need at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
