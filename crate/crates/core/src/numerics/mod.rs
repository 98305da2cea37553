mod eigen;
mod matrix;
mod pod;
mod svd;
#[cfg(test)]
pub(crate) mod test_util;

pub use eigen::{eigenvalues, left_eigen, solve_square, spectral_radius, Complex, LeftEigen};
pub use matrix::Matrix;
pub use pod::{pod_basis, PodBasis};
pub(crate) use svd::check_solve_args;
pub use svd::{truncated_pinv_solve, Rank, SvdFactors, REL_TOL};
