//! Random matrix generators shared by the data generators and the numerical
//! checks.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::matrix::DenseMatrix;
use super::qr::qr_decompose;
use crate::rng::Rng;

pub fn gaussian_vec(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random n×k matrix with orthonormal columns (QR of a Gaussian matrix,
/// `R` diagonal nonnegative).
pub fn random_orthonormal(n: usize, k: usize, rng: &mut Rng) -> DenseMatrix {
    let g = gaussian_matrix(n, k, rng);
    qr_decompose(&g).expect("n >= k").q
}

/// `U diag(eigenvalues) U^T` with `U` a random n×k orthonormal matrix,
/// `k = eigenvalues.len()`. Exactly symmetric.
pub fn random_psd_with_spectrum(n: usize, eigenvalues: &[f64], rng: &mut Rng) -> DenseMatrix {
    let u = random_orthonormal(n, eigenvalues.len(), rng);
    symmetrize(&DenseMatrix::scaled_outer(&u, eigenvalues, &u))
}

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}
