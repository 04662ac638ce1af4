//! Dense linear-algebra kernels: symmetric eigendecomposition, thin QR with
//! rank-1 updates, small SVD and the spectral norm.

pub mod eig;
pub mod matrix;
pub mod qr;
pub mod random;
pub mod svd;

pub use eig::{psd_eig, psd_inv_sqrt_apply, psd_pinv_sqrt_apply, sym_eig, sym_eigvals, SymmetricEig};
pub use matrix::{axpy, dot, norm, DenseMatrix};
pub use qr::{qr_decompose, qr_rank1_update, QrFactors};
pub use svd::{spectral_norm, svd_small, SvdFactors};

#[cfg(test)]
pub(crate) mod test_util {
    use super::matrix::DenseMatrix;
    use super::random::{gaussian_matrix, random_psd_with_spectrum, symmetrize};
    use crate::rng::seeded;

    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        gaussian_matrix(rows, cols, &mut seeded(seed))
    }

    pub fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        symmetrize(&random_matrix(n, n, seed))
    }

    /// PSD of the given rank with eigenvalues spread in [1, 10].
    pub fn random_psd(n: usize, rank: usize, seed: u64) -> DenseMatrix {
        let vals: Vec<f64> = (0..rank).map(|i| 10.0 - 9.0 * i as f64 / rank as f64).collect();
        random_psd_with_spectrum(n, &vals, &mut seeded(seed))
    }
}
