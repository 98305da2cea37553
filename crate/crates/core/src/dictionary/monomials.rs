//! Monomial tables in graded lexicographic order.
//!
//! Within a degree, monomials are ordered by descending exponent vectors,
//! e.g. for two variables `x0², x0·x1, x1²`. A monomial is stored as the
//! non-decreasing list of variable indices it multiplies, which makes the
//! order the ascending lexicographic order of those lists.

use crate::error::{KoopError, Result};
use crate::numerics::Matrix;

/// Bumped whenever the enumeration order changes; archived models record it.
pub const MONOMIAL_ORDER_VERSION: u32 = 1;

/// Number of monomials in `n_vars` variables with total degree in
/// `min_degree..=max_degree`.
pub fn dict_output_dim(n_vars: usize, min_degree: u32, max_degree: u32) -> Result<usize> {
    if n_vars == 0 {
        return Err(KoopError::invalid(
            "polynomial dictionary needs at least one variable",
        ));
    }
    if min_degree < 2 || max_degree < min_degree {
        return Err(KoopError::invalid(format!(
            "degree range {min_degree}..={max_degree} must satisfy 2 <= min <= max"
        )));
    }
    let mut total: usize = 0;
    for k in min_degree..=max_degree {
        let c = binomial(n_vars + k as usize - 1, k as usize)
            .ok_or_else(|| KoopError::invalid("dictionary dimension overflows"))?;
        total = total
            .checked_add(c)
            .ok_or_else(|| KoopError::invalid("dictionary dimension overflows"))?;
    }
    Ok(total)
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).ok()
}

/// Every monomial of degree `1..=max_degree`, each built from a lower-degree
/// parent times one variable; outputs are the entries of degree `>= min_degree`.
#[derive(Debug, Clone)]
pub struct MonomialTable {
    n_vars: usize,
    parent: Vec<usize>,
    var: Vec<usize>,
    terms: Vec<Vec<usize>>,
    first_output: usize,
}

impl MonomialTable {
    pub fn new(n_vars: usize, min_degree: u32, max_degree: u32) -> Result<Self> {
        dict_output_dim(n_vars, min_degree, max_degree)?;
        let mut parent: Vec<usize> = (0..n_vars).collect();
        let mut var: Vec<usize> = (0..n_vars).collect();
        let mut terms: Vec<Vec<usize>> = (0..n_vars).map(|v| vec![v]).collect();
        let mut prev = 0..n_vars;
        let mut first_output = if min_degree <= 1 { 0 } else { usize::MAX };
        for degree in 2..=max_degree {
            let start = terms.len();
            if degree == min_degree {
                first_output = start;
            }
            for p in prev.clone() {
                let last = *terms[p].last().expect("monomials are non-empty");
                for v in last..n_vars {
                    let mut t = terms[p].clone();
                    t.push(v);
                    terms.push(t);
                    parent.push(p);
                    var.push(v);
                }
            }
            prev = start..terms.len();
        }
        Ok(Self {
            n_vars,
            parent,
            var,
            terms,
            first_output,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn output_dim(&self) -> usize {
        self.terms.len() - self.first_output
    }

    /// Variable-index lists of the output monomials, in output order.
    pub fn output_terms(&self) -> &[Vec<usize>] {
        &self.terms[self.first_output..]
    }

    /// Exponent vector of output monomial `k`.
    pub fn exponents(&self, k: usize) -> Vec<u32> {
        let mut e = vec![0; self.n_vars];
        for &v in &self.terms[self.first_output + k] {
            e[v] += 1;
        }
        e
    }

    /// Evaluates the output monomials at `x[..n_vars]`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let mut values = vec![0.0; self.terms.len()];
        values[..self.n_vars].copy_from_slice(&x[..self.n_vars]);
        for e in self.n_vars..self.terms.len() {
            values[e] = values[self.parent[e]] * x[self.var[e]];
        }
        out.copy_from_slice(&values[self.first_output..]);
    }

    /// Writes `∂(monomial k)/∂x_j` into `jac` (output_dim × ncols, ncols >= n_vars).
    pub fn jacobian_into(&self, x: &[f64], jac: &mut Matrix) {
        for (k, term) in self.output_terms().iter().enumerate() {
            let mut j0 = 0;
            while j0 < term.len() {
                let v = term[j0];
                let mut j1 = j0;
                while j1 < term.len() && term[j1] == v {
                    j1 += 1;
                }
                let count = (j1 - j0) as f64;
                // product of the term with one factor of x_v removed
                let mut prod = count;
                for (pos, &w) in term.iter().enumerate() {
                    if pos != j0 {
                        prod *= x[w];
                    }
                }
                jac[(k, v)] = prod;
                j0 = j1;
            }
        }
    }
}

/// Caller-listed monomials given by exponent vectors.
#[derive(Debug, Clone)]
pub struct ExplicitMonomials {
    terms: Vec<Vec<(usize, u32)>>,
}

impl ExplicitMonomials {
    pub fn new(exponents: &[Vec<u32>], n_vars: usize) -> Result<Self> {
        let mut terms = Vec::with_capacity(exponents.len());
        for e in exponents {
            if e.len() != n_vars {
                return Err(KoopError::dims(format!(
                    "exponent vector has {} entries, lifting sees {n_vars} variables",
                    e.len()
                )));
            }
            if e.iter().sum::<u32>() < 2 {
                return Err(KoopError::invalid(
                    "explicit monomials must have total degree >= 2",
                ));
            }
            terms.push(
                e.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(v, &p)| (v, p))
                    .collect(),
            );
        }
        Ok(Self { terms })
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, term) in out.iter_mut().zip(&self.terms) {
            *o = term.iter().map(|&(v, p)| x[v].powi(p as i32)).product();
        }
    }

    pub fn jacobian_into(&self, x: &[f64], jac: &mut Matrix) {
        for (k, term) in self.terms.iter().enumerate() {
            for (a, &(v, p)) in term.iter().enumerate() {
                let mut d = p as f64 * x[v].powi(p as i32 - 1);
                for (b, &(w, q)) in term.iter().enumerate() {
                    if a != b {
                        d *= x[w].powi(q as i32);
                    }
                }
                jac[(k, v)] = d;
            }
        }
    }
}
