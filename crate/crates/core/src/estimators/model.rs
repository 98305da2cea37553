use std::fmt;

use super::dynamics::Dynamics;
use crate::dictionary::{Dictionary, DictionarySpec};
use crate::error::{KoopError, Result};
use crate::numerics::{Matrix, Rank};

/// The four estimator families and their matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    /// `s⁺ = A s`
    Linear { a: Matrix },
    /// `s⁺ = A s + B u`
    LinearControlled { a: Matrix, b: Matrix },
    /// `γ⁺ = A γ + C f(γ)`
    Nonlinear { a: Matrix, c: Matrix },
    /// `γ⁺ = A γ + B u + C f(γ)`
    NonlinearControlled { a: Matrix, b: Matrix, c: Matrix },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Linear { .. } => "dmd",
            ModelFamily::LinearControlled { .. } => "edmdc",
            ModelFamily::Nonlinear { .. } => "nonlinear",
            ModelFamily::NonlinearControlled { .. } => "nonlinear_controlled",
        }
    }

    pub fn a(&self) -> &Matrix {
        match self {
            ModelFamily::Linear { a }
            | ModelFamily::LinearControlled { a, .. }
            | ModelFamily::Nonlinear { a, .. }
            | ModelFamily::NonlinearControlled { a, .. } => a,
        }
    }

    pub fn b(&self) -> Option<&Matrix> {
        match self {
            ModelFamily::LinearControlled { b, .. }
            | ModelFamily::NonlinearControlled { b, .. } => Some(b),
            _ => None,
        }
    }

    pub fn c(&self) -> Option<&Matrix> {
        match self {
            ModelFamily::Nonlinear { c, .. } | ModelFamily::NonlinearControlled { c, .. } => {
                Some(c)
            }
            _ => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            ModelFamily::Linear { .. } | ModelFamily::LinearControlled { .. }
        )
    }

    pub fn is_controlled(&self) -> bool {
        self.b().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelWarning {
    /// The training inputs were identically zero; `B` is the minimum-norm
    /// solution and carries no information.
    UnidentifiableInput,
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::UnidentifiableInput => {
                write!(
                    f,
                    "training inputs were identically zero; B is not identifiable"
                )
            }
        }
    }
}

/// A fitted one-step predictor together with the dictionary it was fitted on.
#[derive(Debug, Clone)]
pub struct KoopmanModel {
    pub family: ModelFamily,
    pub spec: DictionarySpec,
    pub dt: f64,
    pub fit_rank: Rank,
    /// Linear families only: the state is `[γ; f(γ)]` instead of `γ`.
    pub lifted_state: bool,
    pub warnings: Vec<ModelWarning>,
    dict: Dictionary,
}

impl PartialEq for KoopmanModel {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
            && self.spec == other.spec
            && self.dt.to_bits() == other.dt.to_bits()
            && self.fit_rank == other.fit_rank
            && self.lifted_state == other.lifted_state
            && self.warnings == other.warnings
    }
}

impl KoopmanModel {
    pub fn new(
        family: ModelFamily,
        spec: DictionarySpec,
        dt: f64,
        fit_rank: Rank,
        lifted_state: bool,
    ) -> Result<Self> {
        let dict = Dictionary::new(&spec)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(KoopError::invalid("model sample interval must be positive"));
        }
        if lifted_state && !family.is_linear() {
            return Err(KoopError::invalid("only linear models use a lifted state"));
        }
        let m_state = dict.state_dim();
        let l = dict.lift_dim();
        let n = if lifted_state { m_state + l } else { m_state };
        let a = family.a();
        if a.shape() != (n, n) {
            return Err(KoopError::dims(format!(
                "A is {:?}, expected {n}x{n}",
                a.shape()
            )));
        }
        match (family.b(), spec.q) {
            (Some(b), q) if q > 0 => {
                if b.shape() != (n, q) {
                    return Err(KoopError::dims(format!(
                        "B is {:?}, expected {n}x{q}",
                        b.shape()
                    )));
                }
            }
            (None, 0) => {}
            (Some(_), _) => {
                return Err(KoopError::dims("controlled family needs a spec with q > 0"))
            }
            (None, _) => {
                return Err(KoopError::dims(
                    "spec has inputs but the family is autonomous",
                ))
            }
        }
        if let Some(c) = family.c() {
            if c.shape() != (n, l) {
                return Err(KoopError::dims(format!(
                    "C is {:?}, expected {n}x{l}",
                    c.shape()
                )));
            }
        }
        for mat in [Some(family.a()), family.b(), family.c()]
            .into_iter()
            .flatten()
        {
            if !mat.is_finite() {
                return Err(KoopError::NonFinite("model matrix".into()));
            }
        }
        Ok(Self {
            family,
            spec,
            dt,
            fit_rank,
            lifted_state,
            warnings: Vec::new(),
            dict,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    /// Number of observables `m`; they occupy the first `m` state entries.
    pub fn m(&self) -> usize {
        self.spec.m
    }

    /// Delay-state dimension `M` (or `M_c`).
    pub fn delay_dim(&self) -> usize {
        self.dict.state_dim()
    }

    pub fn lift_dim(&self) -> usize {
        self.dict.lift_dim()
    }

    /// Model state built from a delay state: `γ`, or `[γ; f(γ)]` for lifted linear models.
    pub fn state_from_delay(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        if gamma.len() != self.delay_dim() {
            return Err(KoopError::dims(format!(
                "delay state has {} entries, expected {}",
                gamma.len(),
                self.delay_dim()
            )));
        }
        let mut s = gamma.to_vec();
        if self.lifted_state {
            s.extend(self.dict.lift_vec(gamma));
        }
        Ok(s)
    }

    /// Jacobian of the one-step map with respect to the state.
    pub fn jacobian(&self, state: &[f64]) -> Matrix {
        let a = self.family.a().clone();
        match self.family.c() {
            Some(c) => {
                let jf = self.dict.lift_jacobian(state);
                let cj = c.matmul(&jf).expect("conformable by construction");
                a.sub(&cj.scale(-1.0)).expect("same shape")
            }
            None => a,
        }
    }

    /// Map `state ↦ A s + B u + C f(s)`, allocating.
    pub fn apply(&self, state: &[f64], input: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; state.len()];
        self.step(state, input, &mut next);
        next
    }
}

impl Dynamics for KoopmanModel {
    fn state_dim(&self) -> usize {
        self.family.a().rows()
    }

    fn input_dim(&self) -> usize {
        self.family.b().map_or(0, Matrix::cols)
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &[f64], input: &[f64], next: &mut [f64]) {
        next.iter_mut().for_each(|v| *v = 0.0);
        self.family.a().mul_vec_acc(state, next);
        if let Some(b) = self.family.b() {
            b.mul_vec_acc(input, next);
        }
        if let Some(c) = self.family.c() {
            if c.cols() > 0 {
                let f = self.dict.lift_vec(state);
                c.mul_vec_acc(&f, next);
            }
        }
    }
}
