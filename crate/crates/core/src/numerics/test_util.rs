use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;

pub(crate) fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

/// `rows`×`cols` matrix with orthonormal columns (QR of a random matrix).
pub(crate) fn orthonormal(rows: usize, cols: usize, seed: u64) -> Matrix {
    let a = random_matrix(rows, cols, seed);
    let q = a.as_faer().qr().compute_thin_Q();
    Matrix::from_faer(q).unwrap()
}
