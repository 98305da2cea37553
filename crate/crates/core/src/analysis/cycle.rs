use crate::error::{KoopError, Result};
use crate::estimators::Dynamics;
use crate::numerics::Matrix;

/// Relative agreement required between consecutive periods and amplitudes.
pub const CYCLE_RTOL: f64 = 0.005;

/// Consecutive cycles that must agree before a cycle is accepted.
const AGREEING_CYCLES: usize = 3;

/// Crossing-based description of a periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    /// Period in time units (mean of the agreeing crossing intervals).
    pub period: f64,
    /// Period in samples (not rounded).
    pub period_steps: f64,
    /// Decoded states over one period; column 0 is the first sample after an
    /// upward crossing.
    pub samples: Matrix,
    /// Samples between the crossing and `samples` column 0, in (0, 1].
    pub crossing_offset: f64,
    /// Steps iterated before `samples` column 0.
    pub transient_steps: usize,
    pub converged: bool,
    pub observable: usize,
    pub threshold: f64,
}

impl CycleResult {
    /// State at phase `theta` (radians, zero at the upward crossing), by linear
    /// interpolation between the bracketing samples.
    pub fn state_at_phase(&self, theta: f64) -> Result<Vec<f64>> {
        let n = self.samples.cols();
        if !self.converged || n == 0 {
            return Err(KoopError::invalid("cycle has not converged"));
        }
        let frac = theta.rem_euclid(2.0 * std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        // sample index (fractional) of the requested phase; wraps past the end
        let mut s = frac * self.period_steps - self.crossing_offset;
        if s < 0.0 {
            s += self.period_steps;
        }
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        let a = self.samples.col(i);
        let b = self.samples.col((i + 1) % n);
        Ok(a.iter()
            .zip(b)
            .map(|(x, y)| (1.0 - t) * x + t * y)
            .collect())
    }
}

/// Upward crossings of `threshold` by a sampled signal, as fractional sample
/// indices.
#[derive(Debug, Default)]
pub(crate) struct CrossingDetector {
    threshold: f64,
    prev: Option<f64>,
    n: usize,
    pub times: Vec<f64>,
}

impl CrossingDetector {
    pub(crate) fn new(threshold: f64, start: f64) -> Self {
        Self {
            threshold,
            prev: Some(start),
            n: 0,
            times: Vec::new(),
        }
    }

    /// Feeds the next sample; returns the crossing time if one occurred.
    pub(crate) fn push(&mut self, v: f64) -> Option<f64> {
        self.n += 1;
        let prev = self.prev.replace(v)?;
        if prev < self.threshold && v >= self.threshold {
            let t = (self.n - 1) as f64 + (self.threshold - prev) / (v - prev);
            self.times.push(t);
            return Some(t);
        }
        None
    }
}

fn agree(xs: &[f64]) -> bool {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    mean > 0.0 && xs.iter().all(|x| (x - mean).abs() <= CYCLE_RTOL * mean)
}

/// Iterates `model` from `x0` with zero input, discards `transient` steps,
/// then looks for a sustained oscillation of observable `k` through
/// `threshold`.
///
/// The cycle is accepted once the last few crossing intervals and per-cycle
/// peak-to-peak amplitudes agree to [`CYCLE_RTOL`]. Runs that never cross
/// return [`KoopError::NoCrossings`]; runs that cross but never settle (or
/// diverge) return `converged = false`.
pub fn find_limit_cycle(
    model: &impl Dynamics,
    x0: &[f64],
    k: usize,
    threshold: f64,
    transient: usize,
    max_steps: usize,
) -> Result<CycleResult> {
    if max_steps <= transient {
        return Err(KoopError::invalid("max_steps must exceed the transient"));
    }
    if x0.len() != model.full_dim() {
        return Err(KoopError::dims("initial state does not match the model"));
    }
    let input = vec![0.0; model.input_dim()];
    let mut s = model.encode(x0);
    let mut next = vec![0.0; s.len()];
    let step = |s: &mut Vec<f64>, next: &mut Vec<f64>| -> bool {
        model.step(s, &input, next);
        if next.iter().any(|v| !v.is_finite()) {
            return false;
        }
        std::mem::swap(s, next);
        true
    };
    let not_converged = |period_steps: f64, transient_steps: usize| CycleResult {
        period: period_steps * model.dt(),
        period_steps,
        samples: Matrix::zeros(model.full_dim(), 0),
        crossing_offset: 0.0,
        transient_steps,
        converged: false,
        observable: k,
        threshold,
    };
    for i in 0..transient {
        if !step(&mut s, &mut next) {
            return Err(KoopError::Diverged { step: i });
        }
    }
    let mut det = CrossingDetector::new(threshold, model.observe(&s, k));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut amplitudes = Vec::new();
    let mut n = 0;
    let mean_interval = |times: &[f64]| {
        if times.len() < 2 {
            0.0
        } else {
            (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
        }
    };
    while transient + n < max_steps {
        if !step(&mut s, &mut next) {
            return if det.times.is_empty() {
                Err(KoopError::NoCrossings)
            } else {
                Ok(not_converged(mean_interval(&det.times), transient + n))
            };
        }
        n += 1;
        let v = model.observe(&s, k);
        lo = lo.min(v);
        hi = hi.max(v);
        if let Some(t) = det.push(v) {
            if det.times.len() > 1 {
                amplitudes.push(hi - lo);
            }
            lo = f64::INFINITY;
            hi = f64::NEG_INFINITY;
            let times = &det.times;
            if times.len() > AGREEING_CYCLES {
                let recent = &times[times.len() - AGREEING_CYCLES - 1..];
                let intervals: Vec<f64> = recent.windows(2).map(|w| w[1] - w[0]).collect();
                let amps = &amplitudes[amplitudes.len() - AGREEING_CYCLES..];
                if agree(&intervals) && agree(amps) {
                    let period_steps = mean_interval(recent);
                    let count = period_steps.round().max(1.0) as usize;
                    let mut cols = Vec::with_capacity(count);
                    cols.push(model.decode(&s));
                    for _ in 1..count {
                        if !step(&mut s, &mut next) {
                            return Ok(not_converged(period_steps, transient + n));
                        }
                        cols.push(model.decode(&s));
                    }
                    return Ok(CycleResult {
                        period: period_steps * model.dt(),
                        period_steps,
                        samples: Matrix::from_columns(&cols)?,
                        crossing_offset: n as f64 - t,
                        transient_steps: transient + n,
                        converged: true,
                        observable: k,
                        threshold,
                    });
                }
            }
        }
    }
    if det.times.is_empty() {
        return Err(KoopError::NoCrossings);
    }
    Ok(not_converged(mean_interval(&det.times), max_steps))
}
