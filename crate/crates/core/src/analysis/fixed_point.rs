use crate::error::{KoopError, Result};
use crate::estimators::{Dynamics, KoopmanModel};
use crate::numerics::{eigenvalues, solve_square, Complex, Matrix};

pub const MAX_NEWTON_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub state: Vec<f64>,
    /// Eigenvalues of the one-step Jacobian at `state`.
    pub eigenvalues: Vec<Complex>,
    pub residual: f64,
    pub iterations: usize,
}

impl FixedPoint {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton iteration on `γ = A γ + B u + C f(γ)` with backtracking.
pub fn find_fixed_point(
    model: &KoopmanModel,
    u_const: f64,
    guess: &[f64],
    tol: f64,
) -> Result<FixedPoint> {
    let n = model.state_dim();
    if guess.len() != n {
        return Err(KoopError::dims(format!(
            "guess has {} entries, model state has {n}",
            guess.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(KoopError::invalid("tolerance must be positive"));
    }
    let input = vec![u_const; model.input_dim()];
    let residual = |x: &[f64]| -> Vec<f64> {
        let fx = model.apply(x, &input);
        fx.iter().zip(x).map(|(a, b)| a - b).collect()
    };
    let mut x = guess.to_vec();
    let mut r = residual(&x);
    let mut rn = norm(&r);
    for it in 0..=MAX_NEWTON_ITERATIONS {
        if !rn.is_finite() {
            break;
        }
        if rn <= tol {
            let j = model.jacobian(&x);
            return Ok(FixedPoint {
                eigenvalues: eigenvalues(&j)?,
                state: x,
                residual: rn,
                iterations: it,
            });
        }
        if it == MAX_NEWTON_ITERATIONS {
            break;
        }
        let j = model.jacobian(&x);
        let jm = j.sub(&Matrix::identity(n))?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_square(&jm, &neg)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let rt = residual(&trial);
            let rtn = norm(&rt);
            if rtn.is_finite() && (rtn < rn || lambda < 1e-4) {
                x = trial;
                r = rt;
                rn = rtn;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(KoopError::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        reason: format!("fixed-point residual {rn:.3e} above tolerance {tol:.1e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{DictionarySpec, LiftingSpec, PolyScope};
    use crate::estimators::ModelFamily;
    use crate::numerics::Rank;

    fn quad(m: usize, a: Matrix, c: Matrix) -> KoopmanModel {
        let spec = DictionarySpec::new(
            m,
            0,
            0,
            LiftingSpec::Polynomial {
                min_degree: 2,
                max_degree: 2,
                scope: PolyScope::LatestFrame,
            },
        );
        KoopmanModel::new(
            ModelFamily::Nonlinear { a, c },
            spec,
            1.0,
            Rank::Full,
            false,
        )
        .unwrap()
    }

    #[test]
    fn linear_in_effect() {
        let a = Matrix::from_rows(&[vec![0.5, 0.2], vec![-0.1, 0.3]]).unwrap();
        let model = quad(2, a.clone(), Matrix::zeros(2, 3));
        let fp = find_fixed_point(&model, 0.0, &[1.0, -2.0], 1e-12).unwrap();
        assert!(norm(&fp.state) < 1e-12);
        let mut got: Vec<f64> = fp.eigenvalues.iter().map(|l| l.re).collect();
        let mut want: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|l| l.re).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn logistic_fixed_points() {
        let r = 3.8;
        let model = quad(
            1,
            Matrix::new(1, 1, vec![r]).unwrap(),
            Matrix::new(1, 1, vec![-r]).unwrap(),
        );
        let fp = find_fixed_point(&model, 0.0, &[0.6], 1e-12).unwrap();
        assert!((fp.state[0] - (1.0 - 1.0 / r)).abs() < 1e-12);
        assert!((fp.eigenvalues[0].re - (2.0 - r)).abs() < 1e-10);
        let zero = find_fixed_point(&model, 0.0, &[0.05], 1e-12).unwrap();
        assert!(zero.state[0].abs() < 1e-12);
        assert!(fp.residual <= 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        // x⁺ = x + 1 + x² has no real fixed point
        let model = quad(
            1,
            Matrix::new(1, 1, vec![1.0]).unwrap(),
            Matrix::new(1, 1, vec![1.0]).unwrap(),
        );
        let spec = model.spec.clone();
        let shifted = KoopmanModel::new(
            ModelFamily::NonlinearControlled {
                a: Matrix::new(1, 1, vec![1.0]).unwrap(),
                b: Matrix::new(1, 1, vec![1.0]).unwrap(),
                c: Matrix::new(1, 1, vec![1.0]).unwrap(),
            },
            DictionarySpec { q: 1, ..spec },
            1.0,
            Rank::Full,
            false,
        )
        .unwrap();
        assert!(matches!(
            find_fixed_point(&shifted, 1.0, &[0.3], 1e-12),
            Err(KoopError::NoConvergence { .. })
        ));
        assert!(find_fixed_point(&model, 0.0, &[0.0, 0.0], 1e-12).is_err());
    }
}
