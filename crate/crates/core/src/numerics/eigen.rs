use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;

use super::Matrix;
use crate::error::{KoopError, Result};

/// Complex scalar used for eigenvalues.
pub type Complex = faer::c64;

fn check_square(a: &Matrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(KoopError::dims(format!(
            "matrix is {:?}, expected square",
            a.shape()
        )));
    }
    Ok(())
}

pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex>> {
    check_square(a)?;
    if a.rows() == 0 {
        return Ok(Vec::new());
    }
    a.as_faer()
        .eigenvalues()
        .map_err(|e| KoopError::Factorization(format!("eigenvalues: {e:?}")))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Eigenvalues with left eigenvectors normalized so that `wᵢᵀ vⱼ = δᵢⱼ`.
#[derive(Debug, Clone)]
pub struct LeftEigen {
    pub values: Vec<Complex>,
    /// Row `i` is the left eigenvector for `values[i]`.
    pub left: Mat<Complex>,
    /// `‖V‖_F ‖V⁻¹‖_F` for unit-norm right eigenvectors; large means nearly defective.
    pub condition: f64,
}

pub fn left_eigen(a: &Matrix) -> Result<LeftEigen> {
    check_square(a)?;
    let n = a.rows();
    let evd = a
        .as_faer()
        .eigen()
        .map_err(|e| KoopError::Factorization(format!("eigendecomposition: {e:?}")))?;
    let values: Vec<Complex> = (0..n).map(|i| evd.S()[i]).collect();
    let mut v = evd.U().to_owned();
    for j in 0..n {
        let norm = (0..n).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                v[(i, j)] /= Complex::new(norm, 0.0);
            }
        }
    }
    let left = v.partial_piv_lu().inverse();
    let mut frob_v = 0.0;
    let mut frob_w = 0.0;
    for j in 0..n {
        for i in 0..n {
            frob_v += v[(i, j)].norm_sqr();
            frob_w += left[(i, j)].norm_sqr();
        }
    }
    let condition = (frob_v * frob_w).sqrt();
    if !condition.is_finite() {
        return Err(KoopError::Factorization(
            "eigenvector matrix is singular".into(),
        ));
    }
    Ok(LeftEigen {
        values,
        left,
        condition,
    })
}

/// Solves the square system `a x = b` by LU with partial pivoting.
pub fn solve_square(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a)?;
    if b.len() != a.rows() {
        return Err(KoopError::dims(
            "right-hand side length differs from matrix order",
        ));
    }
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.as_faer().partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(KoopError::Factorization("singular linear system".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_eigenvalues() {
        let th = 0.4f64;
        let r = Matrix::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]).unwrap();
        let mut ev = eigenvalues(&r).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[1].im - th.sin()).abs() < 1e-14 && (ev[1].re - th.cos()).abs() < 1e-14);
        assert!((spectral_radius(&r.scale(0.5)).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn left_vectors_are_biorthogonal() {
        let a = Matrix::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![0.0, 3.0, 1.0],
            vec![1.0, 0.0, 0.5],
        ])
        .unwrap();
        let le = left_eigen(&a).unwrap();
        let af = Mat::<Complex>::from_fn(3, 3, |i, j| Complex::new(a[(i, j)], 0.0));
        let wa = &le.left * &af;
        for i in 0..3 {
            for j in 0..3 {
                let expect = le.left[(i, j)] * le.values[i];
                assert!((wa[(i, j)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn square_solve() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let x = solve_square(&a, &[1.0, 2.0]).unwrap();
        assert!(
            (4.0 * x[0] + x[1] - 1.0).abs() < 1e-14
                && (2.0 * x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14
        );
        assert!(solve_square(&Matrix::zeros(2, 2), &[1.0, 1.0]).is_err());
    }
}
