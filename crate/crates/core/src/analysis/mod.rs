//! Prediction error, basins of attraction, limit cycles, fixed points, phase
//! response curves and eigenmode spectra.

mod basins;
mod cycle;
mod error;
mod fixed_point;
mod prc;
mod spectrum;

pub use basins::{
    basin_map, duffing_history_init, settle_value, BasinGridResult, GridAxis, SETTLE_WINDOW,
};
pub use cycle::{find_limit_cycle, CycleResult, CYCLE_RTOL};
pub use error::l2_error;
pub use fixed_point::{find_fixed_point, FixedPoint, MAX_NEWTON_ITERATIONS};
pub use prc::{estimate_prc, phase_grid, PrcPoint, Pulse, PRC_SETTLE_CYCLES};
pub use spectrum::{
    eigenmode_spectrum, spectrum_of, Eigenmode, EigenmodeReport, DEFECTIVE_CONDITION,
};
