use super::model::KoopmanModel;
use crate::error::{KoopError, Result};
use crate::numerics::Matrix;

/// Builds the initial model state from recent observations.
///
/// `observations` is m×(z+1) in time order (oldest column first, current
/// observation last); `past_inputs` is q×z in time order. Missing past inputs
/// are taken as zero. For linear models on a lifted state the lifted features
/// are appended.
pub fn delay_init(
    model: &KoopmanModel,
    observations: &Matrix,
    past_inputs: Option<&Matrix>,
) -> Result<Vec<f64>> {
    let spec = &model.spec;
    let z = spec.z;
    if observations.shape() != (spec.m, z + 1) {
        return Err(KoopError::dims(format!(
            "observation history is {:?}, expected {}x{}",
            observations.shape(),
            spec.m,
            z + 1
        )));
    }
    let zeros = vec![0.0; spec.q];
    let inputs: Vec<&[f64]> = match (past_inputs, spec.q) {
        (Some(_), 0) => {
            return Err(KoopError::invalid(
                "autonomous model given an input history",
            ))
        }
        (Some(u), q) => {
            if u.shape() != (q, z) {
                return Err(KoopError::dims(format!(
                    "input history is {:?}, expected {q}x{z}",
                    u.shape()
                )));
            }
            (0..z).rev().map(|k| u.col(k)).collect()
        }
        (None, _) => vec![zeros.as_slice(); z],
    };
    let dict = model.dictionary();
    let frames: Vec<Vec<f64>> = (0..=z)
        .rev()
        .map(|k| dict.frame(observations.col(k)))
        .collect();
    let gamma = dict.pack_state(frames.iter().map(Vec::as_slice), inputs);
    model.state_from_delay(&gamma)
}
