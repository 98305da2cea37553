//! Reference systems that generate training and validation data.
//!
//! Every simulator is a [`Dynamics`] over one sample interval: fixed-step RK4
//! substeps with the input held constant across the interval, so sample `i`
//! of the input drives the transition from state `i` to state `i + 1`.

mod burgers;
mod duffing;
mod hopf;
mod input;
mod rk4;

pub use burgers::{Burgers, BurgersObservation, BurgersParams, SAFETY, STATIONS};
pub use duffing::{Duffing, DuffingParams};
pub use hopf::{Hopf, HopfParams};
pub use input::{gen_input, InputSignalSpec, NaturalSpline};

use crate::dictionary::ObservableSeries;
use crate::error::{KoopError, Result};
use crate::estimators::{rollout, Dynamics};
use crate::numerics::Matrix;

/// A simulator with a fixed set of measured quantities.
pub trait System: Dynamics {
    fn n_observables(&self) -> usize;
}

/// Sampled observables plus the hidden full state, kept for validation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub series: ObservableSeries,
    /// state_dim × samples.
    pub states: Matrix,
}

/// Number of samples covering `[0, t_end]` at interval `dt`.
pub fn sample_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(KoopError::invalid("simulation duration must be positive"));
    }
    Ok((t_end / dt).round() as usize + 1)
}

/// Runs `system` for `samples` samples from `x0`.
///
/// `inputs` (q × ≥samples) defaults to zero. The returned series carries the
/// inputs that were applied, one column per sample.
pub fn simulate(
    system: &impl System,
    x0: &[f64],
    inputs: Option<&Matrix>,
    samples: usize,
) -> Result<SimOutput> {
    if samples < 2 {
        return Err(KoopError::invalid(
            "a simulation needs at least two samples",
        ));
    }
    let q = system.input_dim();
    let u = match inputs {
        Some(u) => {
            if u.rows() != q || u.cols() < samples {
                return Err(KoopError::dims(format!(
                    "inputs are {:?}, need {q}x{samples} or longer",
                    u.shape()
                )));
            }
            u.col_block(0, samples)
        }
        None => Matrix::zeros(q, samples),
    };
    let traj = rollout(system, x0, (q > 0).then_some(&u), samples - 1)?;
    if let Some(step) = traj.diverged_at {
        return Err(KoopError::Diverged { step });
    }
    let states = traj.states;
    let m = system.n_observables();
    let y = Matrix::from_fn(m, samples, |k, j| system.observe(states.col(j), k))?;
    let series = ObservableSeries::new(y, (q > 0).then_some(u), system.dt())?;
    Ok(SimOutput { series, states })
}

fn input_row(values: &[f64], samples: usize, what: &str) -> Result<Matrix> {
    if values.len() < samples {
        return Err(KoopError::dims(format!(
            "{what} has {} samples, the run needs {samples}",
            values.len()
        )));
    }
    Matrix::row_vector(&values[..samples])
}

/// Duffing run observing `x₁`; `input` must cover `[0, t_end]`.
pub fn simulate_duffing(
    p: DuffingParams,
    x0: [f64; 2],
    input: &[f64],
    t_end: f64,
) -> Result<SimOutput> {
    let sys = Duffing::new(p)?;
    let n = sample_count(t_end, p.dt_sample)?;
    simulate(&sys, &x0, Some(&input_row(input, n, "input")?), n)
}

/// Hopf run observing `x`; no input means `u ≡ 0`.
pub fn simulate_hopf(
    p: HopfParams,
    x0: [f64; 2],
    input: Option<&[f64]>,
    t_end: f64,
) -> Result<SimOutput> {
    let sys = Hopf::new(p)?;
    let n = sample_count(t_end, p.dt_sample)?;
    let u = input.map(|u| input_row(u, n, "input")).transpose()?;
    simulate(&sys, &x0, u.as_ref(), n)
}

/// Burgers run with boundary inputs `wl`, `wr` covering `[0, t_end]`.
///
/// Solutions obey a maximum principle, so the convective stability bound is
/// checked against the largest initial or boundary value.
pub fn simulate_burgers(
    p: BurgersParams,
    observation: BurgersObservation,
    w0: &[f64],
    wl: &[f64],
    wr: &[f64],
    t_end: f64,
) -> Result<SimOutput> {
    let sys = Burgers::new(p, observation)?;
    let n = sample_count(t_end, p.dt_sample)?;
    if w0.len() != p.grid_points {
        return Err(KoopError::dims(format!(
            "initial profile has {} points, grid has {}",
            w0.len(),
            p.grid_points
        )));
    }
    let u = Matrix::vstack(&[
        &input_row(wl, n, "left boundary")?,
        &input_row(wr, n, "right boundary")?,
    ])?;
    let speed = w0
        .iter()
        .chain(&wl[..n])
        .chain(&wr[..n])
        .fold(0.0f64, |a, v| a.max(v.abs()));
    p.check_speed(speed)?;
    simulate(&sys, w0, Some(&u), n)
}
