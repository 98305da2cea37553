use serde::{Deserialize, Serialize};

use super::rk4::rk4_step;
use super::System;
use crate::error::{KoopError, Result};
use crate::estimators::Dynamics;

/// Forced Duffing oscillator `ẋ₁ = x₂, ẋ₂ = u − δx₂ − αx₁ − βx₁³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuffingParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub dt_sample: f64,
    pub substeps: usize,
}

impl Default for DuffingParams {
    /// Double well: stable equilibria at `x₁ = ±1`, saddle at the origin.
    fn default() -> Self {
        Self {
            alpha: -1.0,
            beta: 1.0,
            delta: 0.5,
            dt_sample: 0.1,
            substeps: 10,
        }
    }
}

/// The Duffing vector field as a sampled system; observable `x₁`, one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duffing {
    pub params: DuffingParams,
}

impl Duffing {
    pub fn new(params: DuffingParams) -> Result<Self> {
        if !(params.dt_sample > 0.0 && params.dt_sample.is_finite()) || params.substeps == 0 {
            return Err(KoopError::invalid(
                "Duffing needs dt_sample > 0 and substeps >= 1",
            ));
        }
        let coeffs = [params.alpha, params.beta, params.delta];
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(KoopError::NonFinite("Duffing parameters".into()));
        }
        Ok(Self { params })
    }
}

impl Dynamics for Duffing {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        self.params.dt_sample
    }

    fn step(&self, state: &[f64], input: &[f64], next: &mut [f64]) {
        let DuffingParams {
            alpha,
            beta,
            delta,
            dt_sample,
            substeps,
        } = self.params;
        let u = input.first().copied().unwrap_or(0.0);
        let f = |x: &[f64], dx: &mut [f64]| {
            dx[0] = x[1];
            dx[1] = u - delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0];
        };
        next.copy_from_slice(state);
        let h = dt_sample / substeps as f64;
        for _ in 0..substeps {
            rk4_step(&f, next, h);
        }
    }
}

impl System for Duffing {
    fn n_observables(&self) -> usize {
        1
    }
}
