use serde::{Deserialize, Serialize};

use super::monomials::{dict_output_dim, ExplicitMonomials, MonomialTable};
use crate::error::{KoopError, Result};
use crate::numerics::Matrix;

/// Which delayed frames a polynomial lifting draws its variables from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyScope {
    /// Only the newest frame `h(x_i)`.
    #[default]
    LatestFrame,
    /// Every delayed frame `h(x_i), …, h(x_{i-z})`; never the past inputs.
    AllFrames,
}

/// Declarative description of a lifting function.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LiftingSpec {
    #[default]
    None,
    /// All monomials with total degree in `min_degree..=max_degree`.
    Polynomial {
        min_degree: u32,
        max_degree: u32,
        #[serde(default)]
        scope: PolyScope,
    },
    /// Euclidean distances from the newest observables to each center column.
    Rbf { centers: Matrix },
    /// Radial distances followed by monomials of those distances.
    Composed {
        rbf_centers: Matrix,
        poly_min_degree: u32,
        poly_max_degree: u32,
    },
    /// A caller-chosen list of monomials, one exponent vector per output.
    Monomials {
        exponents: Vec<Vec<u32>>,
        #[serde(default)]
        scope: PolyScope,
    },
}

/// Layout of a delay state: `z + 1` frames of `width = m + b` entries,
/// followed by `z` past inputs of `q` entries each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameDims {
    pub m: usize,
    pub width: usize,
    pub z: usize,
    pub q: usize,
}

impl FrameDims {
    pub fn state_dim(&self) -> usize {
        (self.z + 1) * self.width + self.z * self.q
    }

    pub fn frames_len(&self) -> usize {
        (self.z + 1) * self.width
    }
}

impl LiftingSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, LiftingSpec::None)
    }

    /// Number of leading state entries this lifting reads.
    pub fn input_vars(&self, dims: FrameDims) -> usize {
        match self {
            LiftingSpec::None => 0,
            LiftingSpec::Polynomial { scope, .. } | LiftingSpec::Monomials { scope, .. } => {
                match scope {
                    PolyScope::LatestFrame => dims.width,
                    PolyScope::AllFrames => dims.frames_len(),
                }
            }
            LiftingSpec::Rbf { .. } | LiftingSpec::Composed { .. } => dims.m,
        }
    }

    pub fn output_dim(&self, dims: FrameDims) -> Result<usize> {
        match self {
            LiftingSpec::None => Ok(0),
            LiftingSpec::Polynomial {
                min_degree,
                max_degree,
                ..
            } => dict_output_dim(self.input_vars(dims), *min_degree, *max_degree),
            LiftingSpec::Rbf { centers } => Ok(centers.cols()),
            LiftingSpec::Composed {
                rbf_centers,
                poly_min_degree,
                poly_max_degree,
            } => dict_output_dim(rbf_centers.cols(), *poly_min_degree, *poly_max_degree),
            LiftingSpec::Monomials { exponents, .. } => Ok(exponents.len()),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    None,
    Poly(MonomialTable),
    Explicit(ExplicitMonomials),
    Rbf(Matrix),
    Composed(Matrix, MonomialTable),
}

/// A compiled lifting that reads a prefix of its input vector.
#[derive(Debug, Clone)]
pub struct Lifting {
    kind: Kind,
    n_vars: usize,
    output_dim: usize,
}

impl Lifting {
    pub fn new(spec: &LiftingSpec, dims: FrameDims) -> Result<Self> {
        let n_vars = spec.input_vars(dims);
        let kind = match spec {
            LiftingSpec::None => Kind::None,
            LiftingSpec::Polynomial {
                min_degree,
                max_degree,
                ..
            } => Kind::Poly(MonomialTable::new(n_vars, *min_degree, *max_degree)?),
            LiftingSpec::Monomials { exponents, .. } => {
                Kind::Explicit(ExplicitMonomials::new(exponents, n_vars)?)
            }
            LiftingSpec::Rbf { centers } => {
                check_centers(centers, dims.m)?;
                Kind::Rbf(centers.clone())
            }
            LiftingSpec::Composed {
                rbf_centers,
                poly_min_degree,
                poly_max_degree,
            } => {
                check_centers(rbf_centers, dims.m)?;
                let table =
                    MonomialTable::new(rbf_centers.cols(), *poly_min_degree, *poly_max_degree)?;
                Kind::Composed(rbf_centers.clone(), table)
            }
        };
        let output_dim = spec.output_dim(dims)?;
        Ok(Self {
            kind,
            n_vars,
            output_dim,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        debug_assert!(x.len() >= self.n_vars);
        debug_assert_eq!(out.len(), self.output_dim);
        match &self.kind {
            Kind::None => {}
            Kind::Poly(t) => t.eval(x, out),
            Kind::Explicit(e) => e.eval(x, out),
            Kind::Rbf(c) => radial(c, x, out),
            Kind::Composed(c, t) => {
                let mut r = vec![0.0; c.cols()];
                radial(c, x, &mut r);
                t.eval(&r, out);
            }
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim];
        self.eval(x, &mut out);
        out
    }

    /// Jacobian with respect to the first `ncols` entries of the input.
    pub fn jacobian(&self, x: &[f64], ncols: usize) -> Matrix {
        let mut jac = Matrix::zeros(self.output_dim, ncols);
        match &self.kind {
            Kind::None => {}
            Kind::Poly(t) => t.jacobian_into(x, &mut jac),
            Kind::Explicit(e) => e.jacobian_into(x, &mut jac),
            Kind::Rbf(c) => radial_jacobian_into(c, x, &mut jac),
            Kind::Composed(c, t) => {
                let mut r = vec![0.0; c.cols()];
                radial(c, x, &mut r);
                let mut jr = Matrix::zeros(c.cols(), ncols);
                radial_jacobian_into(c, x, &mut jr);
                let mut jp = Matrix::zeros(t.output_dim(), c.cols());
                t.jacobian_into(&r, &mut jp);
                jac = jp.matmul(&jr).expect("conformable by construction");
            }
        }
        jac
    }
}

fn check_centers(centers: &Matrix, m: usize) -> Result<()> {
    if centers.rows() != m {
        return Err(KoopError::dims(format!(
            "RBF centers have {} rows, observables have {m}",
            centers.rows()
        )));
    }
    if centers.cols() == 0 {
        return Err(KoopError::invalid("RBF lifting needs at least one center"));
    }
    Ok(())
}

fn radial(centers: &Matrix, x: &[f64], out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = centers
            .col(j)
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            .sqrt();
    }
}

/// Gradient `(x − c)/‖x − c‖`, zero at the center itself.
fn radial_jacobian_into(centers: &Matrix, x: &[f64], jac: &mut Matrix) {
    for j in 0..centers.cols() {
        let c = centers.col(j);
        let norm = c
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        for (i, ci) in c.iter().enumerate() {
            jac[(j, i)] = (x[i] - ci) / norm;
        }
    }
}

/// Evaluates `spec` on a delay state laid out as `dims` describes.
pub fn eval_lift(spec: &LiftingSpec, gamma: &[f64], dims: FrameDims) -> Result<Vec<f64>> {
    if gamma.len() != dims.state_dim() {
        return Err(KoopError::dims(format!(
            "state has {} entries, layout expects {}",
            gamma.len(),
            dims.state_dim()
        )));
    }
    Ok(Lifting::new(spec, dims)?.eval_vec(gamma))
}
