use std::f64::consts::PI;

use rayon::prelude::*;

use super::cycle::{CrossingDetector, CycleResult};
use crate::error::{KoopError, Result};
use crate::estimators::Dynamics;

/// Cycles run after the pulse before the phase shift is read off.
pub const PRC_SETTLE_CYCLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrcPoint {
    /// Phase at pulse onset, radians in `[0, 2π)`.
    pub theta: f64,
    /// Asymptotic phase shift, wrapped to `(−π, π]`.
    pub shift: f64,
    /// `shift / (M · L)`.
    pub z: f64,
}

/// Pulse applied by [`estimate_prc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub magnitude: f64,
    /// Duration in time units; rounded to whole samples.
    pub duration: f64,
    /// Input channel receiving the pulse.
    pub channel: usize,
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Upward crossing times (in samples from the start) of a run under `inputs`.
fn crossing_times(
    model: &impl Dynamics,
    start: &[f64],
    pulse_steps: usize,
    pulse: &[f64],
    total: usize,
    cycle: &CycleResult,
) -> Option<Vec<f64>> {
    let zero = vec![0.0; model.input_dim()];
    let mut s = model.encode(start);
    let mut next = vec![0.0; s.len()];
    let mut det = CrossingDetector::new(cycle.threshold, model.observe(&s, cycle.observable));
    for n in 0..total {
        let u = if n < pulse_steps { pulse } else { &zero };
        model.step(&s, u, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return None;
        }
        std::mem::swap(&mut s, &mut next);
        det.push(model.observe(&s, cycle.observable));
    }
    Some(det.times)
}

/// Direct-method phase response curve.
///
/// For each onset phase the model starts on the cycle, receives a rectangular
/// pulse, and relaxes for [`PRC_SETTLE_CYCLES`] periods; the phase shift is the
/// change in the final crossing time relative to an unperturbed run from the
/// same state.
pub fn estimate_prc(
    model: &impl Dynamics,
    cycle: &CycleResult,
    pulse: Pulse,
    phases: &[f64],
) -> Result<Vec<PrcPoint>> {
    if !cycle.converged {
        return Err(KoopError::invalid("phase response needs a converged cycle"));
    }
    if pulse.magnitude == 0.0 || !pulse.magnitude.is_finite() {
        return Err(KoopError::invalid("pulse magnitude must be nonzero"));
    }
    if !(pulse.duration > 0.0) {
        return Err(KoopError::invalid("pulse duration must be positive"));
    }
    if pulse.channel >= model.input_dim() {
        return Err(KoopError::invalid(format!(
            "pulse channel {} but the model has {} inputs",
            pulse.channel,
            model.input_dim()
        )));
    }
    let dt = model.dt();
    let pulse_steps = ((pulse.duration / dt).round() as usize).max(1);
    let effective = pulse_steps as f64 * dt;
    let mut u = vec![0.0; model.input_dim()];
    u[pulse.channel] = pulse.magnitude;
    let p = cycle.period_steps;
    let total = pulse_steps + ((PRC_SETTLE_CYCLES as f64 + 2.0) * p).ceil() as usize;
    phases
        .par_iter()
        .map(|&theta| {
            let theta = theta.rem_euclid(2.0 * PI);
            let start = cycle.state_at_phase(theta)?;
            let diverged = || KoopError::NoConvergence {
                iterations: total,
                reason: format!("run diverged at phase {theta:.3}"),
            };
            let reference =
                crossing_times(model, &start, 0, &u, total, cycle).ok_or_else(diverged)?;
            let kicked = crossing_times(model, &start, pulse_steps, &u, total, cycle)
                .ok_or_else(diverged)?;
            let after = |ts: &[f64]| -> Vec<f64> {
                ts.iter()
                    .copied()
                    .filter(|t| *t > pulse_steps as f64)
                    .collect()
            };
            let (r, k) = (after(&reference), after(&kicked));
            let idx = PRC_SETTLE_CYCLES.min(r.len().min(k.len())).checked_sub(1);
            let Some(idx) = idx.filter(|i| *i >= 1) else {
                return Err(KoopError::NoConvergence {
                    iterations: total,
                    reason: format!("too few crossings after the pulse at phase {theta:.3}"),
                });
            };
            let shift_now = k[idx] - r[idx];
            let shift_before = k[idx - 1] - r[idx - 1];
            if (shift_now - shift_before).abs() > 0.05 * shift_now.abs() + 1e-6 * p {
                return Err(KoopError::NoConvergence {
                    iterations: total,
                    reason: format!("phase shift still drifting at phase {theta:.3}"),
                });
            }
            let shift = wrap(-2.0 * PI * shift_now / p);
            Ok(PrcPoint {
                theta,
                shift,
                z: shift / (pulse.magnitude * effective),
            })
        })
        .collect()
}

/// `count` equispaced phases in `[0, 2π)`.
pub fn phase_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 2.0 * PI * i as f64 / count as f64)
        .collect()
}
