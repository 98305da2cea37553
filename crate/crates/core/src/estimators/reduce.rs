use super::dynamics::Dynamics;
use super::model::{KoopmanModel, ModelFamily};
use crate::dictionary::{Dictionary, DictionarySpec};
use crate::error::{KoopError, Result};
use crate::numerics::{Matrix, PodBasis};

/// A nonlinear predictor projected onto a POD basis:
/// `Ω⁺ = ΦᵀAΦ Ω + ΦᵀB u + ΦᵀC f(ΦΩ)`.
///
/// As a [`Dynamics`] it iterates the coefficients `Ω` internally but takes and
/// returns full delay states (`Φᵀγ` on the way in, `ΦΩ` on the way out).
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub basis: PodBasis,
    pub a: Matrix,
    pub b: Option<Matrix>,
    pub c: Matrix,
    pub spec: DictionarySpec,
    pub dt: f64,
    dict: Dictionary,
}

impl PartialEq for ReducedModel {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
            && self.a == other.a
            && self.b == other.b
            && self.c == other.c
            && self.spec == other.spec
            && self.dt.to_bits() == other.dt.to_bits()
    }
}

impl ReducedModel {
    pub fn new(
        basis: PodBasis,
        a: Matrix,
        b: Option<Matrix>,
        c: Matrix,
        spec: DictionarySpec,
        dt: f64,
    ) -> Result<Self> {
        let dict = Dictionary::new(&spec)?;
        let rho = basis.rho();
        if basis.phi.rows() != dict.state_dim() {
            return Err(KoopError::dims(format!(
                "basis has {} rows, state dimension is {}",
                basis.phi.rows(),
                dict.state_dim()
            )));
        }
        if a.shape() != (rho, rho) || c.shape() != (rho, dict.lift_dim()) {
            return Err(KoopError::dims(
                "reduced matrices do not match the basis order",
            ));
        }
        match (&b, spec.q) {
            (None, 0) => {}
            (Some(b), q) if q > 0 && b.shape() == (rho, q) => {}
            _ => {
                return Err(KoopError::dims(
                    "reduced input matrix does not match the spec",
                ))
            }
        }
        Ok(Self {
            basis,
            a,
            b,
            c,
            spec,
            dt,
            dict,
        })
    }

    pub fn rho(&self) -> usize {
        self.basis.rho()
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }
}

/// Projects a nonlinear model onto `basis` (M×ρ, orthonormal columns).
pub fn reduce(model: &KoopmanModel, basis: &PodBasis) -> Result<ReducedModel> {
    let (a, b, c) = match &model.family {
        ModelFamily::Nonlinear { a, c } => (a, None, c),
        ModelFamily::NonlinearControlled { a, b, c } => (a, Some(b), c),
        _ => {
            return Err(KoopError::WrongFamily {
                family: model.family.name(),
                reason: "only nonlinear predictors can be reduced".into(),
            })
        }
    };
    let phi = &basis.phi;
    if phi.rows() != a.rows() {
        return Err(KoopError::dims(format!(
            "basis has {} rows, model state dimension is {}",
            phi.rows(),
            a.rows()
        )));
    }
    let phit = phi.transpose();
    let ared = phit.matmul(&a.matmul(phi)?)?;
    let bred = b.map(|b| phit.matmul(b)).transpose()?;
    let cred = phit.matmul(c)?;
    ReducedModel::new(
        basis.clone(),
        ared,
        bred,
        cred,
        model.spec.clone(),
        model.dt,
    )
}

impl Dynamics for ReducedModel {
    fn state_dim(&self) -> usize {
        self.rho()
    }

    fn input_dim(&self) -> usize {
        self.b.as_ref().map_or(0, Matrix::cols)
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &[f64], input: &[f64], next: &mut [f64]) {
        next.iter_mut().for_each(|v| *v = 0.0);
        self.a.mul_vec_acc(state, next);
        if let Some(b) = &self.b {
            b.mul_vec_acc(input, next);
        }
        if self.c.cols() > 0 {
            let f = self.dict.lift_vec(&self.basis.lift(state));
            self.c.mul_vec_acc(&f, next);
        }
    }

    fn observe(&self, state: &[f64], k: usize) -> f64 {
        let phi = &self.basis.phi;
        (0..phi.cols()).map(|j| phi[(k, j)] * state[j]).sum()
    }

    fn full_dim(&self) -> usize {
        self.basis.phi.rows()
    }

    fn encode(&self, full: &[f64]) -> Vec<f64> {
        self.basis.project(full)
    }

    fn decode(&self, state: &[f64]) -> Vec<f64> {
        self.basis.lift(state)
    }
}
