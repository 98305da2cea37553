use super::dynamics::Dynamics;
use super::model::{KoopmanModel, ModelFamily, ModelWarning};
use crate::dictionary::LiftedData;
use crate::error::{KoopError, Result};
use crate::numerics::{check_solve_args, Matrix, Rank, SvdFactors};

/// Which regression to run on a [`LiftedData`] set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// `Γ⁺ ≈ A Γ`
    Dmd,
    /// `[Γ⁺; F⁺] ≈ A [Γ; F]`
    DmdLifted,
    /// `Γ⁺ ≈ A Γ + B U`
    Edmdc,
    /// `[Γ⁺; F⁺] ≈ A [Γ; F] + B U`
    EdmdcLifted,
    /// `Γ⁺ ≈ A Γ + C F`
    Nonlinear,
    /// `Γ⁺ ≈ A Γ + B U + C F`
    NonlinearControlled,
}

impl FitKind {
    pub fn is_controlled(self) -> bool {
        matches!(
            self,
            FitKind::Edmdc | FitKind::EdmdcLifted | FitKind::NonlinearControlled
        )
    }

    pub fn lifted_state(self) -> bool {
        matches!(self, FitKind::DmdLifted | FitKind::EdmdcLifted)
    }
}

/// A factored regression problem that can be solved at several ranks.
///
/// The SVD of the stacked regressor is computed once; [`PreparedFit::fit`]
/// then costs two matrix products per rank.
#[derive(Debug, Clone)]
pub struct PreparedFit {
    kind: FitKind,
    target: Matrix,
    svd: SvdFactors,
    regressor_rows: usize,
    blocks: Vec<usize>,
    data_spec: crate::dictionary::DictionarySpec,
    zero_input: bool,
}

impl PreparedFit {
    pub fn new(data: &LiftedData, kind: FitKind) -> Result<Self> {
        if data.is_empty() {
            return Err(KoopError::Empty("training data has no columns".into()));
        }
        if !kind.is_controlled() && data.spec.q > 0 {
            return Err(KoopError::WrongFamily {
                family: "autonomous",
                reason: "the dictionary carries inputs; use a controlled fit".into(),
            });
        }
        let inputs = if kind.is_controlled() {
            Some(data.inputs.as_ref().ok_or(KoopError::MissingInputs)?)
        } else {
            None
        };
        let mut zero_input = false;
        let (target, regressor, blocks) = match kind {
            FitKind::Dmd => (
                data.gamma_plus.clone(),
                data.gamma.clone(),
                vec![data.gamma.rows()],
            ),
            FitKind::Nonlinear => (
                data.gamma_plus.clone(),
                Matrix::vstack(&[&data.gamma, &data.lifted])?,
                vec![data.gamma.rows(), data.lifted.rows()],
            ),
            FitKind::DmdLifted => {
                let fp = data.lifted_plus()?;
                let z = Matrix::vstack(&[&data.gamma, &data.lifted])?;
                let n = z.rows();
                (Matrix::vstack(&[&data.gamma_plus, &fp])?, z, vec![n])
            }
            FitKind::Edmdc => {
                let u = inputs.expect("controlled");
                zero_input = u.max_abs() == 0.0;
                (
                    data.gamma_plus.clone(),
                    Matrix::vstack(&[&data.gamma, u])?,
                    vec![data.gamma.rows(), u.rows()],
                )
            }
            FitKind::EdmdcLifted => {
                let u = inputs.expect("controlled");
                zero_input = u.max_abs() == 0.0;
                let fp = data.lifted_plus()?;
                let n = data.gamma.rows() + data.lifted.rows();
                (
                    Matrix::vstack(&[&data.gamma_plus, &fp])?,
                    Matrix::vstack(&[&data.gamma, &data.lifted, u])?,
                    vec![n, u.rows()],
                )
            }
            FitKind::NonlinearControlled => {
                let u = inputs.expect("controlled");
                zero_input = u.max_abs() == 0.0;
                (
                    data.gamma_plus.clone(),
                    Matrix::vstack(&[&data.gamma, u, &data.lifted])?,
                    vec![data.gamma.rows(), u.rows(), data.lifted.rows()],
                )
            }
        };
        check_solve_args(&target, &regressor, Rank::Full)?;
        let svd = SvdFactors::compute(&regressor)?;
        Ok(Self {
            kind,
            target,
            svd,
            regressor_rows: regressor.rows(),
            blocks,
            data_spec: data.spec.clone(),
            zero_input,
        })
    }

    pub fn kind(&self) -> FitKind {
        self.kind
    }

    /// Largest admissible truncation rank, `min(rows, d)`.
    pub fn max_rank(&self) -> usize {
        self.regressor_rows.min(self.svd.vt.cols())
    }

    /// Singular values of the stacked regressor.
    pub fn singular_values(&self) -> &[f64] {
        &self.svd.s
    }

    /// Nonzero spectrum of the fitted state matrix `A` at `rank`.
    ///
    /// `A = P Q` with `P` n×r and `Q` r×n, so its nonzero eigenvalues are
    /// those of the r×r product `Q P`. Cheap even when n is large.
    pub fn state_eigenvalues(&self, rank: Rank) -> Result<Vec<crate::numerics::Complex>> {
        let r = self.svd.effective_rank(rank);
        let n = self.blocks[0];
        if r == 0 {
            return Ok(Vec::new());
        }
        let vt = self.svd.vt.as_faer().subrows(0, r);
        let mut p = self.target.as_faer() * vt.transpose();
        for k in 0..r {
            let inv = 1.0 / self.svd.s[k];
            for v in p.col_as_slice_mut(k) {
                *v *= inv;
            }
        }
        let q = self.svd.u.as_faer().submatrix(0, 0, n, r);
        let small = Matrix::from_faer_unchecked(q.transpose() * &p);
        crate::numerics::eigenvalues(&small)
    }

    pub fn fit(&self, rank: Rank) -> Result<KoopmanModel> {
        if let Rank::Truncated(r) = rank {
            if r == 0 || r > self.max_rank() {
                return Err(KoopError::invalid(format!(
                    "rank {r} outside 1..={}",
                    self.max_rank()
                )));
            }
        }
        let ahat = self.svd.solve(&self.target, rank)?;
        let mut parts = Vec::with_capacity(self.blocks.len());
        let mut c0 = 0;
        for &w in &self.blocks {
            parts.push(ahat.col_block(c0, c0 + w));
            c0 += w;
        }
        let mut parts = parts.into_iter();
        let mut next = || parts.next().expect("block count matches family");
        let family = match self.kind {
            FitKind::Dmd | FitKind::DmdLifted => ModelFamily::Linear { a: next() },
            FitKind::Edmdc | FitKind::EdmdcLifted => ModelFamily::LinearControlled {
                a: next(),
                b: next(),
            },
            FitKind::Nonlinear => ModelFamily::Nonlinear {
                a: next(),
                c: next(),
            },
            FitKind::NonlinearControlled => {
                let a = next();
                let b = next();
                let c = next();
                ModelFamily::NonlinearControlled { a, b, c }
            }
        };
        let mut model = KoopmanModel::new(
            family,
            self.data_spec.clone(),
            1.0,
            rank,
            self.kind.lifted_state(),
        )?;
        if self.zero_input {
            model.warnings.push(ModelWarning::UnidentifiableInput);
        }
        Ok(model)
    }
}

fn fit_with(data: &LiftedData, kind: FitKind, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    let mut model = PreparedFit::new(data, kind)?.fit(rank)?;
    model.dt = dt;
    Ok(model)
}

/// Linear DMD on the delay state: `A = Γ⁺ Γ†`.
pub fn fit_dmd(data: &LiftedData, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    fit_with(data, FitKind::Dmd, rank, dt)
}

/// Linear EDMD on the lifted state `[γ; f(γ)]`.
pub fn fit_edmd(data: &LiftedData, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    fit_with(data, FitKind::DmdLifted, rank, dt)
}

/// Linear model with inputs: `[A B] = Γ⁺ [Γ; U]†`.
pub fn fit_edmdc(data: &LiftedData, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    fit_with(data, FitKind::Edmdc, rank, dt)
}

/// Linear model with inputs on the lifted state: `[A B] = [Γ⁺; F⁺] [Γ; F; U]†`.
pub fn fit_edmdc_lifted(data: &LiftedData, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    fit_with(data, FitKind::EdmdcLifted, rank, dt)
}

/// Nonlinear predictor: `[A_n C_n] = Γ⁺ [Γ; F]†`.
pub fn fit_nonlinear(data: &LiftedData, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    fit_with(data, FitKind::Nonlinear, rank, dt)
}

/// Nonlinear predictor with inputs: `[A_c B_c C_c] = Γ⁺ [Γ; U; F]†`.
pub fn fit_nonlinear_controlled(data: &LiftedData, rank: Rank, dt: f64) -> Result<KoopmanModel> {
    fit_with(data, FitKind::NonlinearControlled, rank, dt)
}

/// Frobenius norm of the one-step prediction error over the training pairs,
/// measured in the model's own state coordinates.
pub fn training_residual(model: &KoopmanModel, data: &LiftedData) -> Result<f64> {
    if data.spec != model.spec {
        return Err(KoopError::invalid(
            "data and model use different dictionaries",
        ));
    }
    let lifted_plus = if model.lifted_state {
        Some(data.lifted_plus()?)
    } else {
        None
    };
    let q = model.input_dim();
    let mut total = 0.0;
    for j in 0..data.len() {
        let mut s = data.gamma.col(j).to_vec();
        let mut target = data.gamma_plus.col(j).to_vec();
        if let Some(fp) = &lifted_plus {
            s.extend_from_slice(data.lifted.col(j));
            target.extend_from_slice(fp.col(j));
        }
        let u: &[f64] = if q > 0 {
            data.inputs.as_ref().ok_or(KoopError::MissingInputs)?.col(j)
        } else {
            &[]
        };
        let pred = model.apply(&s, u);
        total += pred
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total.sqrt())
}
