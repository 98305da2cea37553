//! Data-driven identification of nonlinear Koopman predictors.
//!
//! Snapshot series are delay-embedded and lifted through a polynomial or
//! radial-basis dictionary ([`dictionary`]), regressed onto linear or
//! nonlinear one-step predictors ([`estimators`]), optionally projected onto
//! a POD basis, and evaluated against the reference systems in
//! [`simulators`] with the tools in [`analysis`].

pub mod analysis;
pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod numerics;
pub mod rng;
pub mod simulators;

pub use dictionary::{
    assemble, DictionarySpec, LiftedData, LiftingSpec, ObservableSeries, PolyScope,
};
pub use error::{KoopError, Result};
pub use estimators::{
    delay_init, reduce, rollout, Dynamics, KoopmanModel, ModelFamily, ReducedModel, Trajectory,
};
pub use numerics::{pod_basis, Complex, Matrix, PodBasis, Rank};
