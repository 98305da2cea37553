use crate::error::{KoopError, Result};
use crate::numerics::Matrix;

/// Per-step `∫ (w_true − w_pred)² dx` by the trapezoid rule over equispaced
/// stations (rows), one value per time step (column).
pub fn l2_error(truth: &Matrix, pred: &Matrix, dx: f64) -> Result<Vec<f64>> {
    if truth.shape() != pred.shape() {
        return Err(KoopError::dims(format!(
            "trajectories differ in shape: {:?} vs {:?}",
            truth.shape(),
            pred.shape()
        )));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(KoopError::invalid("station spacing must be positive"));
    }
    let n = truth.rows();
    Ok((0..truth.cols())
        .map(|j| {
            let d: Vec<f64> = truth
                .col(j)
                .iter()
                .zip(pred.col(j))
                .map(|(a, b)| (a - b) * (a - b))
                .collect();
            match n {
                0 => 0.0,
                1 => dx * d[0],
                _ => dx * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[n - 1])),
            }
        })
        .collect())
}
