use serde::{Deserialize, Serialize};

use super::{Matrix, SvdFactors};
use crate::error::{KoopError, Result};

/// Orthonormal POD modes of a snapshot matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodBasis {
    /// M×ρ, orthonormal columns.
    pub phi: Matrix,
    /// All nonzero-capable eigenvalues of ΓΓᵀ, descending (length min(M, d)).
    pub eigenvalues: Vec<f64>,
    /// Sum of the kept eigenvalues over the sum of all of them.
    pub energy_fraction: f64,
}

impl PodBasis {
    pub fn rho(&self) -> usize {
        self.phi.cols()
    }

    /// Modal coefficients `Φᵀ γ`.
    pub fn project(&self, gamma: &[f64]) -> Vec<f64> {
        self.phi.tr_mul_vec(gamma)
    }

    /// Reconstruction `Φ ω`.
    pub fn lift(&self, omega: &[f64]) -> Vec<f64> {
        self.phi.mul_vec(omega)
    }
}

/// Leading `rho` eigenvectors of `Γ Γᵀ`, computed from the SVD of `Γ`.
///
/// Each mode is oriented so that its largest-magnitude entry is positive.
pub fn pod_basis(gamma: &Matrix, rho: usize) -> Result<PodBasis> {
    if gamma.is_empty() {
        return Err(KoopError::Empty("snapshot matrix for POD".into()));
    }
    let max = gamma.rows().min(gamma.cols());
    if rho == 0 || rho > max {
        return Err(KoopError::invalid(format!(
            "POD order {rho} outside 1..={max}"
        )));
    }
    let svd = SvdFactors::compute(gamma)?;
    let eigenvalues: Vec<f64> = svd.s.iter().map(|s| s * s).collect();
    let total: f64 = eigenvalues.iter().sum();
    let kept: f64 = eigenvalues[..rho].iter().sum();
    let mut phi = svd.u.col_block(0, rho);
    for k in 0..rho {
        let col = phi.col_mut(k);
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(PodBasis {
        phi,
        eigenvalues,
        energy_fraction: if total > 0.0 { kept / total } else { 1.0 },
    })
}
