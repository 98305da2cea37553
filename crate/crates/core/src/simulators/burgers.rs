use serde::{Deserialize, Serialize};

use super::rk4::rk4_step;
use super::System;
use crate::error::{KoopError, Result};
use crate::estimators::Dynamics;

/// Fraction of the explicit stability limit a substep may use.
pub const SAFETY: f64 = 0.5;

/// Number of equispaced measurement stations (`x = 0, 0.05, …, 0.95`).
pub const STATIONS: usize = 20;

/// Viscous Burgers equation `w_t = w_xx/Re − w w_x` on `[0, 1]` with the
/// boundary values `w(0) = u₁`, `w(1) = u₂` as inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersParams {
    pub re: f64,
    pub grid_points: usize,
    pub dt_sample: f64,
    pub substeps: usize,
}

impl BurgersParams {
    pub fn dx(&self) -> f64 {
        1.0 / (self.grid_points - 1) as f64
    }

    fn substep(&self) -> f64 {
        self.dt_sample / self.substeps as f64
    }

    /// Fewest substeps meeting the stability bound for speeds up to `max_speed`.
    pub fn min_substeps(re: f64, grid_points: usize, dt_sample: f64, max_speed: f64) -> usize {
        let dx = 1.0 / (grid_points.max(2) - 1) as f64;
        let mut limit = dx * dx * re / 2.0;
        if max_speed > 0.0 {
            limit = limit.min(dx / max_speed);
        }
        (dt_sample / (SAFETY * limit)).ceil().max(1.0) as usize
    }

    /// Checks the convective bound for solutions bounded by `max_speed`.
    pub fn check_speed(&self, max_speed: f64) -> Result<()> {
        if max_speed > 0.0 && self.substep() > SAFETY * self.dx() / max_speed {
            return Err(KoopError::Stability(format!(
                "substep {:.3e} exceeds the convective limit for |w| up to {max_speed}",
                self.substep()
            )));
        }
        Ok(())
    }
}

/// Which quantities a Burgers run reports as observables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurgersObservation {
    /// Nearest grid point to each of the 20 stations.
    #[default]
    Stations,
    /// Every grid point.
    Grid,
}

/// Central-difference Burgers discretization as a sampled system.
///
/// The state is the full grid including both endpoints; each step pins the
/// endpoints to the input held over the sample interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Burgers {
    pub params: BurgersParams,
    pub observation: BurgersObservation,
    stations: Vec<usize>,
}

impl Burgers {
    pub fn new(params: BurgersParams, observation: BurgersObservation) -> Result<Self> {
        if !(params.re > 0.0 && params.re.is_finite()) {
            return Err(KoopError::invalid("Reynolds number must be positive"));
        }
        if params.grid_points < 8 {
            return Err(KoopError::invalid("Burgers grid needs at least 8 points"));
        }
        if !(params.dt_sample > 0.0 && params.dt_sample.is_finite()) || params.substeps == 0 {
            return Err(KoopError::invalid(
                "Burgers needs dt_sample > 0 and substeps >= 1",
            ));
        }
        let dx = params.dx();
        let diffusive = dx * dx * params.re / 2.0;
        if params.substep() > SAFETY * diffusive {
            return Err(KoopError::Stability(format!(
                "substep {:.3e} exceeds the diffusive limit {:.3e}; use at least {} substeps",
                params.substep(),
                SAFETY * diffusive,
                BurgersParams::min_substeps(params.re, params.grid_points, params.dt_sample, 0.0)
            )));
        }
        let stations = (0..STATIONS)
            .map(|k| (k as f64 * 0.05 / dx).round() as usize)
            .collect();
        Ok(Self {
            params,
            observation,
            stations,
        })
    }

    /// Grid indices sampled as observables in station mode.
    pub fn stations(&self) -> &[usize] {
        &self.stations
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.params.dx();
        (0..self.params.grid_points)
            .map(|i| i as f64 * dx)
            .collect()
    }
}

impl Dynamics for Burgers {
    fn state_dim(&self) -> usize {
        self.params.grid_points
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.params.dt_sample
    }

    fn step(&self, state: &[f64], input: &[f64], next: &mut [f64]) {
        let n = self.params.grid_points;
        let dx = self.params.dx();
        let nu = 1.0 / self.params.re;
        let (wl, wr) = (input[0], input[1]);
        let f = |w: &[f64], dw: &mut [f64]| {
            dw[0] = 0.0;
            dw[n - 1] = 0.0;
            for i in 1..n - 1 {
                let diff = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (dx * dx);
                let conv = w[i] * (w[i + 1] - w[i - 1]) / (2.0 * dx);
                dw[i] = nu * diff - conv;
            }
        };
        next.copy_from_slice(state);
        next[0] = wl;
        next[n - 1] = wr;
        let h = self.params.substep();
        for _ in 0..self.params.substeps {
            rk4_step(&f, next, h);
        }
    }

    fn observe(&self, state: &[f64], k: usize) -> f64 {
        match self.observation {
            BurgersObservation::Stations => state[self.stations[k]],
            BurgersObservation::Grid => state[k],
        }
    }
}

impl System for Burgers {
    fn n_observables(&self) -> usize {
        match self.observation {
            BurgersObservation::Stations => STATIONS,
            BurgersObservation::Grid => self.params.grid_points,
        }
    }
}
