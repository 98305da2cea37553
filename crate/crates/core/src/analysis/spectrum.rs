use std::f64::consts::PI;

use crate::dictionary::LiftedData;
use crate::error::{KoopError, Result};
use crate::estimators::KoopmanModel;
use crate::numerics::{left_eigen, Complex, Matrix};

/// Eigenvector condition number above which the report is flagged.
pub const DEFECTIVE_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenmode {
    pub eigenvalue: Complex,
    /// `Im(log λ) / (2π Δt)`.
    pub frequency: f64,
    /// Mean over snapshots of `|wᵀ a_i|`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenmodeReport {
    /// Sorted by amplitude, largest first.
    pub modes: Vec<Eigenmode>,
    /// Eigenvector condition number; large values mean `A` is close to defective.
    pub condition: f64,
}

impl EigenmodeReport {
    pub fn nearly_defective(&self) -> bool {
        self.condition > DEFECTIVE_CONDITION
    }
}

/// Frequency and mean amplitude of every eigenmode of `a` over the snapshot
/// columns of `snapshots`.
pub fn spectrum_of(a: &Matrix, snapshots: &Matrix, dt: f64) -> Result<EigenmodeReport> {
    if snapshots.rows() != a.rows() {
        return Err(KoopError::dims(
            "snapshots do not match the operator dimension",
        ));
    }
    if snapshots.cols() == 0 {
        return Err(KoopError::Empty("no snapshots".into()));
    }
    let le = left_eigen(a)?;
    let n = a.rows();
    let d = snapshots.cols();
    let mut modes: Vec<Eigenmode> = (0..n)
        .map(|i| {
            let total: f64 = (0..d)
                .map(|j| {
                    let col = snapshots.col(j);
                    let mut acc = Complex::new(0.0, 0.0);
                    for (k, v) in col.iter().enumerate() {
                        acc += le.left[(i, k)] * *v;
                    }
                    acc.norm()
                })
                .sum();
            let lambda = le.values[i];
            Eigenmode {
                eigenvalue: lambda,
                frequency: lambda.im.atan2(lambda.re) / (2.0 * PI * dt),
                amplitude: total / d as f64,
            }
        })
        .collect();
    modes.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    Ok(EigenmodeReport {
        modes,
        condition: le.condition,
    })
}

/// Eigenmode spectrum of a linear model over its training snapshots.
pub fn eigenmode_spectrum(model: &KoopmanModel, data: &LiftedData) -> Result<EigenmodeReport> {
    if !model.family.is_linear() {
        return Err(KoopError::WrongFamily {
            family: model.family.name(),
            reason: "eigenmode spectra need a linear model".into(),
        });
    }
    if data.spec != model.spec {
        return Err(KoopError::invalid(
            "data and model use different dictionaries",
        ));
    }
    let snapshots = if model.lifted_state {
        Matrix::vstack(&[&data.gamma, &data.lifted])?
    } else {
        data.gamma.clone()
    };
    spectrum_of(model.family.a(), &snapshots, model.dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_eigenvalue_has_zero_frequency() {
        let r = spectrum_of(
            &Matrix::identity(1),
            &Matrix::new(1, 2, vec![1.0, -3.0]).unwrap(),
            0.1,
        )
        .unwrap();
        assert_eq!(r.modes[0].frequency, 0.0);
        assert!((r.modes[0].amplitude - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_frequencies() {
        let (omega, dt) = (3.0f64, 0.05);
        let th = omega * dt;
        let a = Matrix::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]).unwrap();
        let r = spectrum_of(&a, &Matrix::identity(2), dt).unwrap();
        let mut f: Vec<f64> = r.modes.iter().map(|m| m.frequency).collect();
        f.sort_by(f64::total_cmp);
        let expect = omega / (2.0 * PI);
        assert!((f[0] + expect).abs() < 1e-12 && (f[1] - expect).abs() < 1e-12);
        assert!((r.modes[0].amplitude - r.modes[1].amplitude).abs() < 1e-12);
    }

    #[test]
    fn constructed_amplitudes() {
        // A = V diag(0.99, 0.5) V⁻¹ with a_i = v₁ 0.99^i + 0.2 v₂ 0.5^i
        let v = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let vinv = Matrix::from_rows(&[vec![1.0, -0.5], vec![0.0, 0.5]]).unwrap();
        let d = Matrix::from_rows(&[vec![0.99, 0.0], vec![0.0, 0.5]]).unwrap();
        let a = v.matmul(&d).unwrap().matmul(&vinv).unwrap();
        let cols: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let (c1, c2) = (0.99f64.powi(i), 0.2 * 0.5f64.powi(i));
                vec![c1 + c2, 2.0 * c2]
            })
            .collect();
        let snaps = Matrix::from_columns(&cols).unwrap();
        let r = spectrum_of(&a, &snaps, 1.0).unwrap();
        // w₁ᵀ a_i = 0.99^i and w₂ᵀ a_i = 0.2·0.5^i for the biorthogonal pair
        let m1 = (0..30).map(|i| 0.99f64.powi(i)).sum::<f64>() / 30.0;
        let m2 = (0..30).map(|i| 0.2 * 0.5f64.powi(i)).sum::<f64>() / 30.0;
        assert!((r.modes[0].eigenvalue.re - 0.99).abs() < 1e-12);
        assert!(
            (r.modes[0].amplitude - m1 * (v.col(0).iter().map(|x| x * x).sum::<f64>().sqrt()))
                .abs()
                < 1e-10
        );
        assert!(
            (r.modes[1].amplitude - m2 * (v.col(1).iter().map(|x| x * x).sum::<f64>().sqrt()))
                .abs()
                < 1e-10
        );
        assert!(!r.nearly_defective());
    }

    #[test]
    fn conjugate_pairs_have_opposite_frequencies() {
        let a = Matrix::from_rows(&[
            vec![0.9, -0.3, 0.1],
            vec![0.3, 0.9, 0.0],
            vec![0.0, 0.1, 0.5],
        ])
        .unwrap();
        let r = spectrum_of(&a, &Matrix::identity(3), 0.1).unwrap();
        for m in &r.modes {
            let partner = r
                .modes
                .iter()
                .find(|o| (o.eigenvalue - m.eigenvalue.conj()).norm() < 1e-10)
                .unwrap();
            assert!((partner.frequency + m.frequency).abs() < 1e-10 || m.eigenvalue.im == 0.0);
        }
    }
}
