//! Least-squares estimators, POD reduction, and rollouts.

mod dynamics;
mod fit;
mod init;
mod model;
mod reduce;

pub use dynamics::{advance, rollout, Dynamics, Trajectory};
pub use fit::{
    fit_dmd, fit_edmd, fit_edmdc, fit_edmdc_lifted, fit_nonlinear, fit_nonlinear_controlled,
    training_residual, FitKind, PreparedFit,
};
pub use init::delay_init;
pub use model::{KoopmanModel, ModelFamily, ModelWarning};
pub use reduce::{reduce, ReducedModel};
