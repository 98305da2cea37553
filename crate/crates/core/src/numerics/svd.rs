use std::fmt;

use faer::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Matrix;
use crate::error::{KoopError, Result};

/// Singular values below `REL_TOL * s_max` are dropped even at full rank.
pub const REL_TOL: f64 = 1e-12;

/// Truncation rank for pseudoinverse solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rank {
    #[default]
    Full,
    Truncated(usize),
}

impl Rank {
    /// Caps a truncated rank at `max`, leaving `Full` untouched.
    pub fn capped(self, max: usize) -> Rank {
        match self {
            Rank::Full => Rank::Full,
            Rank::Truncated(r) => Rank::Truncated(r.min(max)),
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Full => write!(f, "full"),
            Rank::Truncated(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RankRepr {
    Count(u64),
    Word(String),
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rank::Full => RankRepr::Word("full".into()),
            Rank::Truncated(r) => RankRepr::Count(*r as u64),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RankRepr::deserialize(d)? {
            RankRepr::Count(0) => Err(serde::de::Error::custom("rank must be positive")),
            RankRepr::Count(r) => Ok(Rank::Truncated(r as usize)),
            RankRepr::Word(w) if w == "full" => Ok(Rank::Full),
            RankRepr::Word(w) => Err(serde::de::Error::custom(format!(
                "rank must be a positive integer or \"full\", got {w:?}"
            ))),
        }
    }
}

/// Thin SVD `A = U diag(S) Vt` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl SvdFactors {
    pub fn compute(a: &Matrix) -> Result<Self> {
        if a.is_empty() {
            return Err(KoopError::Empty("matrix for SVD".into()));
        }
        let svd = a
            .as_faer()
            .thin_svd()
            .map_err(|e| KoopError::Factorization(format!("{e:?}")))?;
        let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        let u = Matrix::from_faer(svd.U().to_owned())?;
        let vt = Matrix::from_faer(svd.V().transpose().to_owned())?;
        Ok(Self { u, s, vt })
    }

    /// Number of singular values kept for `rank` after the relative floor.
    pub fn effective_rank(&self, rank: Rank) -> usize {
        let Some(&s0) = self.s.first() else {
            return 0;
        };
        let above = self.s.iter().take_while(|&&v| v > REL_TOL * s0).count();
        match rank {
            Rank::Full => above,
            Rank::Truncated(r) => r.min(above),
        }
    }

    /// `U_r diag(S_r) Vt_r`.
    pub fn reconstruct(&self, rank: Rank) -> Matrix {
        let r = match rank {
            Rank::Full => self.s.len(),
            Rank::Truncated(r) => r.min(self.s.len()),
        };
        let u = self.u.as_faer().subcols(0, r);
        let vt = self.vt.as_faer().subrows(0, r);
        let us = Mat::from_fn(u.nrows(), r, |i, k| u[(i, k)] * self.s[k]);
        Matrix::from_faer_unchecked(&us * vt)
    }

    /// Minimizes `‖Y − M Z̃‖_F` where `Z̃` is the rank-truncated factored matrix:
    /// `M = Y V_r Σ_r⁻¹ U_rᵀ`.
    pub fn solve(&self, y: &Matrix, rank: Rank) -> Result<Matrix> {
        if y.cols() != self.vt.cols() {
            return Err(KoopError::dims(format!(
                "target has {} columns, regressor has {}",
                y.cols(),
                self.vt.cols()
            )));
        }
        let r = self.effective_rank(rank);
        if r == 0 {
            return Ok(Matrix::zeros(y.rows(), self.u.rows()));
        }
        let vt = self.vt.as_faer().subrows(0, r);
        let mut yv = y.as_faer() * vt.transpose();
        for k in 0..r {
            let inv = 1.0 / self.s[k];
            for v in yv.col_as_slice_mut(k) {
                *v *= inv;
            }
        }
        let u = self.u.as_faer().subcols(0, r);
        Ok(Matrix::from_faer_unchecked(&yv * u.transpose()))
    }
}

/// Least-squares map `M` (p×s) from regressors `Z` (s×d) to targets `Y` (p×d),
/// using a rank-truncated pseudoinverse of `Z`.
pub fn truncated_pinv_solve(y: &Matrix, z: &Matrix, rank: Rank) -> Result<Matrix> {
    check_solve_args(y, z, rank)?;
    SvdFactors::compute(z)?.solve(y, rank)
}

pub(crate) fn check_solve_args(y: &Matrix, z: &Matrix, rank: Rank) -> Result<()> {
    if z.cols() == 0 || y.cols() == 0 {
        return Err(KoopError::Empty("no snapshot columns".into()));
    }
    if y.cols() != z.cols() {
        return Err(KoopError::dims(format!(
            "Y has {} columns but Z has {}",
            y.cols(),
            z.cols()
        )));
    }
    if z.rows() == 0 {
        return Err(KoopError::Empty("regressor has no rows".into()));
    }
    if let Rank::Truncated(r) = rank {
        if r == 0 {
            return Err(KoopError::invalid("rank must be positive"));
        }
        let max = z.rows().min(z.cols());
        if r > max {
            return Err(KoopError::invalid(format!(
                "rank {r} exceeds min(rows, cols) = {max}"
            )));
        }
    }
    Ok(())
}
