use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KoopError, Result};
use crate::estimators::{delay_init, Dynamics, KoopmanModel};
use crate::numerics::Matrix;

/// Steps in the trailing window used to decide that a run has settled.
pub const SETTLE_WINDOW: usize = 200;

/// `count` equispaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 || !(lo.is_finite() && hi.is_finite()) || (count > 1 && lo >= hi) {
            return Err(KoopError::invalid(
                "grid axis needs lo < hi and at least one point",
            ));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Settled observable value per initial condition; NaN marks divergence or
/// failure to settle within the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinGridResult {
    pub x1: GridAxis,
    pub x2: GridAxis,
    /// Row-major: entry `i * x2.count + j` belongs to `(x1[i], x2[j])`.
    pub values: Vec<f64>,
    pub u_const: f64,
}

impl BasinGridResult {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.x2.count + j]
    }

    /// Fraction of cells whose labels agree within `tol`, counting two NaNs as agreement.
    pub fn agreement(&self, other: &BasinGridResult, tol: f64) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(KoopError::dims("basin grids differ in size"));
        }
        let same = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| (a.is_nan() && b.is_nan()) || (*a - *b).abs() < tol)
            .count();
        Ok(same as f64 / self.values.len() as f64)
    }
}

/// Runs `model` under a constant input and returns the settled value of
/// observable `k`, or NaN.
pub fn settle_value(
    model: &impl Dynamics,
    state: Vec<f64>,
    input: &[f64],
    k: usize,
    horizon: usize,
    settle_tol: f64,
) -> f64 {
    let window = SETTLE_WINDOW.min(horizon);
    let mut s = state;
    let mut next = vec![0.0; s.len()];
    let mut trail = Vec::with_capacity(window);
    for n in 0..horizon {
        model.step(&s, input, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return f64::NAN;
        }
        std::mem::swap(&mut s, &mut next);
        if n + window >= horizon {
            trail.push(model.observe(&s, k));
        }
    }
    let (lo, hi) = trail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    if trail.is_empty() || hi - lo >= settle_tol {
        f64::NAN
    } else {
        *trail.last().expect("nonempty")
    }
}

/// Basin map of `model` over a grid of initial conditions `(x₁, x₂)`.
///
/// `init` turns a grid point into the model's internal state; grid points are
/// evaluated in parallel.
#[allow(clippy::too_many_arguments)]
pub fn basin_map<D, F>(
    model: &D,
    init: F,
    x1: GridAxis,
    x2: GridAxis,
    u_const: f64,
    observable: usize,
    horizon: usize,
    settle_tol: f64,
) -> Result<BasinGridResult>
where
    D: Dynamics,
    F: Fn(f64, f64) -> Result<Vec<f64>> + Sync,
{
    if horizon == 0 || !(settle_tol > 0.0) {
        return Err(KoopError::invalid(
            "basin map needs horizon > 0 and settle_tol > 0",
        ));
    }
    let input = vec![u_const; model.input_dim()];
    let values = (0..x1.count * x2.count)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / x2.count, c % x2.count);
            let full = init(x1.value(i), x2.value(j))?;
            let state = model.encode(&full);
            Ok(settle_value(
                model, state, &input, observable, horizon, settle_tol,
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BasinGridResult {
        x1,
        x2,
        values,
        u_const,
    })
}

/// Model state for the Duffing point `(x₁, x₂)`: the history frames are
/// `x₁ − kΔt·x₂` (backward extrapolation), past inputs zero.
pub fn duffing_history_init(model: &KoopmanModel, x1: f64, x2: f64) -> Result<Vec<f64>> {
    if model.m() != 1 {
        return Err(KoopError::invalid(
            "Duffing initialization needs a single observable",
        ));
    }
    let z = model.spec.z;
    let hist = Matrix::from_fn(1, z + 1, |_, c| x1 - (z - c) as f64 * model.dt * x2)?;
    delay_init(model, &hist, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::{Duffing, DuffingParams};

    fn duffing() -> Duffing {
        Duffing::new(DuffingParams::default()).unwrap()
    }

    #[test]
    fn reference_labels_and_symmetry() {
        let sys = duffing();
        let axis = GridAxis::new(-2.0, 2.0, 9).unwrap();
        let map = basin_map(&sys, |a, b| Ok(vec![a, b]), axis, axis, 0.0, 0, 1500, 1e-4).unwrap();
        // (1, 0) is grid cell (6, 4)
        assert!((map.get(6, 4) - 1.0).abs() < 1e-4);
        for i in 0..9 {
            for j in 0..9 {
                let (a, b) = (map.get(i, j), map.get(8 - i, 8 - j));
                if i == 4 && j == 4 {
                    assert!(a.abs() < 1e-12);
                    continue;
                }
                assert!((a.abs() - 1.0).abs() < 1e-4, "cell ({i},{j}) = {a}");
                assert!((a + b).abs() < 1e-8);
            }
        }
        assert_eq!(map.agreement(&map, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn divergence_and_no_settling_are_nan() {
        struct Grow;
        impl Dynamics for Grow {
            fn state_dim(&self) -> usize {
                1
            }
            fn input_dim(&self) -> usize {
                0
            }
            fn dt(&self) -> f64 {
                1.0
            }
            fn step(&self, s: &[f64], _: &[f64], n: &mut [f64]) {
                n[0] = s[0] * s[0] * 10.0 + 1.0;
            }
        }
        assert!(settle_value(&Grow, vec![2.0], &[], 0, 500, 1e-4).is_nan());
        struct Flip;
        impl Dynamics for Flip {
            fn state_dim(&self) -> usize {
                1
            }
            fn input_dim(&self) -> usize {
                0
            }
            fn dt(&self) -> f64 {
                1.0
            }
            fn step(&self, s: &[f64], _: &[f64], n: &mut [f64]) {
                n[0] = -s[0];
            }
        }
        assert!(settle_value(&Flip, vec![1.0], &[], 0, 500, 1e-4).is_nan());
    }

    #[test]
    fn axis_values() {
        let a = GridAxis::new(-2.0, 2.0, 41).unwrap();
        assert_eq!(a.value(0), -2.0);
        assert_eq!(a.value(40), 2.0);
        assert!((a.value(20)).abs() < 1e-15);
        assert!(GridAxis::new(1.0, 0.0, 3).is_err());
    }
}
