use serde::{Deserialize, Serialize};

use super::rk4::rk4_step;
use super::System;
use crate::error::{KoopError, Result};
use crate::estimators::Dynamics;

/// Hopf normal form with an additive input on `x`:
/// `ẋ = μx − ωy − x(x²+y²) + s·u, ẏ = ωx + μy − y(x²+y²)`.
///
/// For `μ > 0` the circle of radius `√μ` is a stable limit cycle of period `2π/ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfParams {
    pub mu: f64,
    pub omega: f64,
    pub input_scale: f64,
    pub dt_sample: f64,
    pub substeps: usize,
}

impl Default for HopfParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            omega: 2.0 * std::f64::consts::PI / 5.0,
            input_scale: 1.0,
            dt_sample: 0.05,
            substeps: 5,
        }
    }
}

/// The Hopf oscillator as a sampled system; observable `x`, one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hopf {
    pub params: HopfParams,
}

impl Hopf {
    pub fn new(params: HopfParams) -> Result<Self> {
        if !(params.dt_sample > 0.0 && params.dt_sample.is_finite()) || params.substeps == 0 {
            return Err(KoopError::invalid(
                "Hopf needs dt_sample > 0 and substeps >= 1",
            ));
        }
        if ![params.mu, params.omega, params.input_scale]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(KoopError::NonFinite("Hopf parameters".into()));
        }
        Ok(Self { params })
    }

    /// Cycle period `2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.params.omega.abs()
    }
}

impl Dynamics for Hopf {
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
        let HopfParams {
            mu,
            omega,
            input_scale,
            dt_sample,
            substeps,
        } = self.params;
        let push = input_scale * input.first().copied().unwrap_or(0.0);
        let f = |s: &[f64], ds: &mut [f64]| {
            let r2 = s[0] * s[0] + s[1] * s[1];
            ds[0] = mu * s[0] - omega * s[1] - s[0] * r2 + push;
            ds[1] = omega * s[0] + mu * s[1] - s[1] * r2;
        };
        next.copy_from_slice(state);
        let h = dt_sample / substeps as f64;
        for _ in 0..substeps {
            rk4_step(&f, next, h);
        }
    }
}

impl System for Hopf {
    fn n_observables(&self) -> usize {
        1
    }
}
