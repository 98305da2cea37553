//! Delay embedding, lifting dictionaries and training-matrix assembly.
//!
//! A delay state stacks the newest `z + 1` frames `h(x_i), …, h(x_{i-z})`
//! (each frame is the observables followed by an optional pre-lifting),
//! then, for controlled systems, the `z` preceding inputs
//! `u_{i-1}, …, u_{i-z}`.

mod lifting;
mod monomials;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lifting::{eval_lift, FrameDims, Lifting, LiftingSpec, PolyScope};
pub use monomials::{dict_output_dim, MonomialTable, MONOMIAL_ORDER_VERSION};

use crate::error::{KoopError, Result};
use crate::numerics::Matrix;

/// Uniformly sampled observables, optionally with aligned inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    /// m×T, one snapshot per column.
    pub y: Matrix,
    /// q×T inputs aligned with the columns of `y`.
    pub u: Option<Matrix>,
    pub dt: f64,
}

impl ObservableSeries {
    pub fn new(y: Matrix, u: Option<Matrix>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(KoopError::invalid(format!(
                "sample interval must be positive, got {dt}"
            )));
        }
        if y.rows() == 0 {
            return Err(KoopError::Empty("series has no observables".into()));
        }
        if y.cols() < 2 {
            return Err(KoopError::SeriesTooShort {
                len: y.cols(),
                needed: 2,
            });
        }
        if let Some(u) = &u {
            if u.cols() != y.cols() {
                return Err(KoopError::dims(format!(
                    "inputs have {} samples, observables have {}",
                    u.cols(),
                    y.cols()
                )));
            }
        }
        Ok(Self { y, u, dt })
    }

    pub fn len(&self) -> usize {
        self.y.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.cols() == 0
    }

    pub fn m(&self) -> usize {
        self.y.rows()
    }

    pub fn q(&self) -> usize {
        self.u.as_ref().map_or(0, Matrix::rows)
    }
}

/// Delay depth plus the two liftings that shape the lifted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySpec {
    pub m: usize,
    #[serde(default)]
    pub q: usize,
    #[serde(default)]
    pub z: usize,
    /// Applied to each frame's observables inside `h`.
    #[serde(default)]
    pub pre_lift: LiftingSpec,
    /// The nonlinear lifting `f` of the delay state.
    #[serde(default)]
    pub lift: LiftingSpec,
}

impl DictionarySpec {
    pub fn new(m: usize, q: usize, z: usize, lift: LiftingSpec) -> Self {
        Self {
            m,
            q,
            z,
            pre_lift: LiftingSpec::None,
            lift,
        }
    }

    pub fn is_controlled(&self) -> bool {
        self.q > 0
    }

    /// Output dimension `b` of the per-frame pre-lifting.
    pub fn pre_lift_dim(&self) -> Result<usize> {
        self.pre_lift.output_dim(self.pre_lift_dims())
    }

    fn pre_lift_dims(&self) -> FrameDims {
        FrameDims {
            m: self.m,
            width: self.m,
            z: 0,
            q: 0,
        }
    }

    pub fn frame_dims(&self) -> Result<FrameDims> {
        Ok(FrameDims {
            m: self.m,
            width: self.m + self.pre_lift_dim()?,
            z: self.z,
            q: self.q,
        })
    }

    /// `M = (z+1)(m+b)` autonomous, `M_c = (z+1)(m+b) + z q` controlled.
    pub fn state_dim(&self) -> Result<usize> {
        Ok(self.frame_dims()?.state_dim())
    }

    /// `L`, the number of lifted features.
    pub fn lift_dim(&self) -> Result<usize> {
        self.lift.output_dim(self.frame_dims()?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(KoopError::invalid(
                "dictionary needs at least one observable",
            ));
        }
        Dictionary::new(self).map(|_| ())
    }
}

/// A [`DictionarySpec`] compiled into evaluators.
#[derive(Debug, Clone)]
pub struct Dictionary {
    spec: DictionarySpec,
    dims: FrameDims,
    pre: Lifting,
    lift: Lifting,
}

impl Dictionary {
    pub fn new(spec: &DictionarySpec) -> Result<Self> {
        if spec.m == 0 {
            return Err(KoopError::invalid(
                "dictionary needs at least one observable",
            ));
        }
        if matches!(
            spec.pre_lift,
            LiftingSpec::Polynomial {
                scope: PolyScope::AllFrames,
                ..
            }
        ) {
            return Err(KoopError::invalid(
                "a pre-lifting acts on a single frame; use scope = latest_frame",
            ));
        }
        let pre = Lifting::new(&spec.pre_lift, spec.pre_lift_dims())?;
        let dims = spec.frame_dims()?;
        let lift = Lifting::new(&spec.lift, dims)?;
        Ok(Self {
            spec: spec.clone(),
            dims,
            pre,
            lift,
        })
    }

    pub fn spec(&self) -> &DictionarySpec {
        &self.spec
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    pub fn state_dim(&self) -> usize {
        self.dims.state_dim()
    }

    pub fn lift_dim(&self) -> usize {
        self.lift.output_dim()
    }

    /// `h(g) = [g; f_pre(g)]`.
    pub fn frame(&self, g: &[f64]) -> Vec<f64> {
        let mut h = Vec::with_capacity(self.dims.width);
        h.extend_from_slice(g);
        h.resize(self.dims.width, 0.0);
        self.pre.eval(g, &mut h[self.spec.m..]);
        h
    }

    /// Packs frames (newest first) and past inputs (newest first) into a state.
    pub fn pack_state<'a>(
        &self,
        frames: impl IntoIterator<Item = &'a [f64]>,
        past_inputs: impl IntoIterator<Item = &'a [f64]>,
    ) -> Vec<f64> {
        let mut gamma = Vec::with_capacity(self.state_dim());
        for f in frames.into_iter().take(self.spec.z + 1) {
            gamma.extend_from_slice(f);
        }
        if self.spec.q > 0 {
            for u in past_inputs.into_iter().take(self.spec.z) {
                gamma.extend_from_slice(u);
            }
        }
        debug_assert_eq!(gamma.len(), self.state_dim());
        gamma
    }

    pub fn lift(&self, gamma: &[f64], out: &mut [f64]) {
        self.lift.eval(gamma, out);
    }

    pub fn lift_vec(&self, gamma: &[f64]) -> Vec<f64> {
        self.lift.eval_vec(gamma)
    }

    /// `∂f/∂γ`, L × state_dim.
    pub fn lift_jacobian(&self, gamma: &[f64]) -> Matrix {
        self.lift.jacobian(gamma, self.state_dim())
    }

    fn check_series(&self, series: &ObservableSeries) -> Result<()> {
        if series.m() != self.spec.m {
            return Err(KoopError::dims(format!(
                "series has {} observables, dictionary expects {}",
                series.m(),
                self.spec.m
            )));
        }
        if self.spec.q > 0 {
            match &series.u {
                None => return Err(KoopError::MissingInputs),
                Some(u) if u.rows() != self.spec.q => {
                    return Err(KoopError::dims(format!(
                        "series has {} inputs, dictionary expects {}",
                        u.rows(),
                        self.spec.q
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn state_at(&self, frames: &Matrix, series: &ObservableSeries, i: usize) -> Vec<f64> {
        let z = self.spec.z;
        let u = series.u.as_ref();
        self.pack_state(
            (0..=z).map(|k| frames.col(i - k)),
            (1..=z).map(|k| u.expect("checked").col(i - k)),
        )
    }

    fn frames(&self, series: &ObservableSeries) -> Result<Matrix> {
        let cols: Vec<Vec<f64>> = (0..series.len())
            .map(|i| self.frame(series.y.col(i)))
            .collect();
        Matrix::from_columns(&cols)
    }
}

/// Delay state `γ_i` (or `γ_{c,i}` for controlled specs) at sample `i`.
pub fn build_delay_state(
    series: &ObservableSeries,
    spec: &DictionarySpec,
    i: usize,
) -> Result<Vec<f64>> {
    let dict = Dictionary::new(spec)?;
    dict.check_series(series)?;
    if i >= series.len() {
        return Err(KoopError::IndexOutOfRange {
            index: i,
            len: series.len(),
        });
    }
    if i < spec.z {
        return Err(KoopError::InsufficientHistory {
            index: i,
            needed: spec.z,
        });
    }
    let frames: Vec<Vec<f64>> = (i - spec.z..=i)
        .rev()
        .map(|k| dict.frame(series.y.col(k)))
        .collect();
    let u = series.u.as_ref();
    Ok(dict.pack_state(
        frames.iter().map(Vec::as_slice),
        (1..=spec.z).map(|k| u.expect("checked").col(i - k)),
    ))
}

/// Training matrices for the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedData {
    /// M×d delay states `γ_{z}, …, γ_{T-2}`.
    pub gamma: Matrix,
    /// M×d successor states.
    pub gamma_plus: Matrix,
    /// q×d inputs applied between each state and its successor.
    pub inputs: Option<Matrix>,
    /// L×d lifted features of `gamma`.
    pub lifted: Matrix,
    pub spec: DictionarySpec,
}

impl LiftedData {
    /// Validates externally assembled training matrices against `spec`.
    pub fn from_parts(
        gamma: Matrix,
        gamma_plus: Matrix,
        inputs: Option<Matrix>,
        lifted: Matrix,
        spec: DictionarySpec,
    ) -> Result<Self> {
        let m_state = spec.state_dim()?;
        let l = spec.lift_dim()?;
        let d = gamma.cols();
        if gamma.rows() != m_state || gamma_plus.rows() != m_state {
            return Err(KoopError::dims(format!("state rows must equal {m_state}")));
        }
        if lifted.rows() != l {
            return Err(KoopError::dims(format!("lifted rows must equal {l}")));
        }
        if gamma_plus.cols() != d || lifted.cols() != d {
            return Err(KoopError::dims(
                "training matrices have unequal column counts",
            ));
        }
        match (&inputs, spec.q) {
            (None, 0) => {}
            (Some(u), q) if q > 0 && u.rows() == q && u.cols() == d => {}
            (None, _) => return Err(KoopError::MissingInputs),
            (Some(_), _) => return Err(KoopError::dims("inputs do not match the spec's q")),
        }
        Ok(Self {
            gamma,
            gamma_plus,
            inputs,
            lifted,
            spec,
        })
    }

    /// Number of snapshot pairs `d`.
    pub fn len(&self) -> usize {
        self.gamma.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.cols() == 0
    }

    /// Joins training sets built with the same spec (e.g. several trajectories).
    pub fn concat(parts: &[LiftedData]) -> Result<LiftedData> {
        let first = parts
            .first()
            .ok_or_else(|| KoopError::Empty("no data sets".into()))?;
        if parts.iter().any(|p| p.spec != first.spec) {
            return Err(KoopError::invalid(
                "cannot join data built with different specs",
            ));
        }
        let gamma = Matrix::hstack(&parts.iter().map(|p| &p.gamma).collect::<Vec<_>>())?;
        let gamma_plus = Matrix::hstack(&parts.iter().map(|p| &p.gamma_plus).collect::<Vec<_>>())?;
        let lifted = Matrix::hstack(&parts.iter().map(|p| &p.lifted).collect::<Vec<_>>())?;
        let inputs = match &first.inputs {
            Some(_) => Some(Matrix::hstack(
                &parts
                    .iter()
                    .map(|p| p.inputs.as_ref().ok_or(KoopError::MissingInputs))
                    .collect::<Result<Vec<_>>>()?,
            )?),
            None => None,
        };
        Ok(LiftedData {
            gamma,
            gamma_plus,
            inputs,
            lifted,
            spec: first.spec.clone(),
        })
    }

    /// Lifted features of the successor states.
    pub fn lifted_plus(&self) -> Result<Matrix> {
        let dict = Dictionary::new(&self.spec)?;
        lift_columns(&dict, &self.gamma_plus)
    }
}

fn lift_columns(dict: &Dictionary, states: &Matrix) -> Result<Matrix> {
    let l = dict.lift_dim();
    let cols: Vec<Vec<f64>> = (0..states.cols())
        .into_par_iter()
        .map(|j| dict.lift_vec(states.col(j)))
        .collect();
    if l == 0 {
        return Ok(Matrix::zeros(0, states.cols()));
    }
    Matrix::from_columns(&cols)
}

/// Builds `Γ`, `Γ⁺`, the inputs and `F` from a series: `d = T − z − 1`
/// columns, column `j` pairing `γ_{z+j}` with `γ_{z+j+1}`.
///
/// Autonomous specs ignore any inputs the series carries.
pub fn assemble(series: &ObservableSeries, spec: &DictionarySpec) -> Result<LiftedData> {
    let dict = Dictionary::new(spec)?;
    dict.check_series(series)?;
    let t = series.len();
    let z = spec.z;
    if t < z + 2 {
        return Err(KoopError::SeriesTooShort {
            len: t,
            needed: z + 2,
        });
    }
    let d = t - z - 1;
    let frames = dict.frames(series)?;
    let states: Vec<Vec<f64>> = (z..t).map(|i| dict.state_at(&frames, series, i)).collect();
    let all = Matrix::from_columns(&states)?;
    let gamma = all.col_block(0, d);
    let gamma_plus = all.col_block(1, d + 1);
    let inputs = if spec.q > 0 {
        Some(series.u.as_ref().expect("checked").col_block(z, z + d))
    } else {
        None
    };
    let lifted = lift_columns(&dict, &gamma)?;
    if !lifted.is_finite() {
        return Err(KoopError::NonFinite("lifted features".into()));
    }
    LiftedData::from_parts(gamma, gamma_plus, inputs, lifted, spec.clone())
}

/// `count` RBF centers drawn uniformly from the box `lo..hi` (one bound per observable).
pub fn sample_centers(lo: &[f64], hi: &[f64], count: usize, rng: &mut impl Rng) -> Result<Matrix> {
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(KoopError::dims(
            "center box bounds must have equal, nonzero length",
        ));
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return Err(KoopError::invalid(
            "center box needs lo < hi in every coordinate",
        ));
    }
    let mut data = Vec::with_capacity(lo.len() * count);
    for _ in 0..count {
        for (a, b) in lo.iter().zip(hi) {
            data.push(rng.gen_range(*a..*b));
        }
    }
    Matrix::new(lo.len(), count, data)
}
