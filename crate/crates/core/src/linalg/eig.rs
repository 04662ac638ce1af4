//! Symmetric eigendecomposition by Householder tridiagonalization followed by
//! implicit QL iterations (the classic `tred2`/`tql2` pair), plus the matrix
//! functions built on it.

use std::ops::{Index, IndexMut};

use super::matrix::{canonical_sign, DenseMatrix};
use crate::error::{Error, Result};

/// Absolute asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues of a PSD input may dip this far below zero before being
/// rejected; anything in `[-PSD_TOL, 0)` is clamped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// Eigenpairs of a real symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymmetricEig {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: DenseMatrix,
}

impl SymmetricEig {
    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::scaled_outer(&self.eigenvectors, &self.eigenvalues, &self.eigenvectors)
    }

    /// `E f(Λ) E^T x`.
    pub fn apply_fn(&self, x: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut coeffs = self.eigenvectors.t_matvec(x);
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= f(l);
        }
        self.eigenvectors.matvec(&coeffs)
    }
}

fn check_symmetric(a: &DenseMatrix, op: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dim(
            op,
            format!("expected a square matrix, got {}x{}", a.rows(), a.cols()),
        ));
    }
    if a.rows() == 0 {
        return Err(Error::dim(op, "empty matrix"));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymmetricEig> {
    check_symmetric(a, "sym_eig")?;
    let n = a.rows();
    let mut v = ColMajor::from_symmetric(a);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.col(src).to_vec();
        canonical_sign(&mut col);
        eigenvectors.set_col(dst, &col);
    }
    Ok(SymmetricEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, sorted descending.
pub fn sym_eigvals(a: &DenseMatrix) -> Result<Vec<f64>> {
    // The QL sweep without vectors is O(n^2); the reduction still dominates.
    Ok(sym_eig(a)?.eigenvalues)
}

/// Eigendecomposition of a PSD matrix with slightly negative round-off
/// eigenvalues clamped to zero.
pub fn psd_eig(a: &DenseMatrix) -> Result<SymmetricEig> {
    let mut eig = sym_eig(a)?;
    let scale = eig.eigenvalues.first().map_or(0.0, |v| v.abs()).max(1.0);
    for l in eig.eigenvalues.iter_mut() {
        if *l < 0.0 {
            if *l < -PSD_TOL * scale {
                return Err(Error::NotPsd(*l));
            }
            *l = 0.0;
        }
    }
    Ok(eig)
}

/// Computes `(δI + A^{1/2})^{-1} g` for symmetric PSD `A`.
///
/// With `delta == 0` the square root must be nonsingular.
pub fn psd_inv_sqrt_apply(a: &DenseMatrix, delta: f64, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != a.rows() {
        return Err(Error::dim(
            "psd_inv_sqrt_apply",
            format!("vector of length {} for a {}x{} matrix", g.len(), a.rows(), a.cols()),
        ));
    }
    if delta < 0.0 || !delta.is_finite() {
        return Err(Error::config("delta", "must be finite and nonnegative"));
    }
    let eig = psd_eig(a)?;
    if delta == 0.0 {
        let smallest = eig.eigenvalues.last().copied().unwrap_or(0.0).sqrt();
        let largest = eig.eigenvalues[0].sqrt();
        if smallest <= 1e-12 * largest.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(format!(
                "smallest eigenvalue of A^(1/2) is {smallest:e} with delta = 0"
            )));
        }
    }
    Ok(eig.apply_fn(g, |l| 1.0 / (l.sqrt() + delta)))
}

/// `(δI + A^{1/2})^{-1} g` from a precomputed eigendecomposition. When
/// `delta == 0` this is the pseudo-inverse: eigenvalues of `A` at or below
/// `rel_tol * λ_max` are treated as zero and their directions dropped.
pub fn psd_pinv_sqrt_apply(eig: &SymmetricEig, delta: f64, g: &[f64], rel_tol: f64) -> Vec<f64> {
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = rel_tol * top;
    eig.apply_fn(g, |l| {
        let l = l.max(0.0);
        if delta == 0.0 && (l <= cutoff || l == 0.0) {
            0.0
        } else {
            1.0 / (l.sqrt() + delta)
        }
    })
}

/// Trace of the principal square root of a PSD matrix, with eigenvalues below
/// `rel_tol * λ_max` treated as zero.
pub fn trace_sqrt(a: &DenseMatrix, rel_tol: f64) -> Result<f64> {
    let vals = sym_eig(a)?.eigenvalues;
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    Ok(vals
        .iter()
        .filter(|&&l| l > rel_tol * top)
        .map(|l| l.sqrt())
        .sum())
}

/// Column-major n×n scratch matrix; every hot loop below walks down a column.
struct ColMajor {
    n: usize,
    data: Vec<f64>,
}

impl ColMajor {
    fn from_symmetric(a: &DenseMatrix) -> Self {
        // A is symmetric, so its row-major buffer is also its column-major one.
        ColMajor {
            n: a.rows(),
            data: a.as_slice().to_vec(),
        }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    fn two_cols_mut(&mut self, i: usize) -> (&mut [f64], &mut [f64]) {
        let n = self.n;
        let (a, b) = self.data[i * n..(i + 2) * n].split_at_mut(n);
        (a, b)
    }
}

impl Index<(usize, usize)> for ColMajor {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.n + i]
    }
}

impl IndexMut<(usize, usize)> for ColMajor {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.n + i]
    }
}

/// Householder reduction of the symmetric matrix held in `v` to tridiagonal
/// form. On return `d` holds the diagonal, `e[1..]` the subdiagonal and `v`
/// the accumulated orthogonal transform.
fn tred2(v: &mut ColMajor, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                let colj = v.col(j);
                g = e[j] + colj[j] * f;
                for k in (j + 1)..i {
                    let vkj = colj[k];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let colj = v.col_mut(j);
                for k in j..i {
                    colj[k] -= f * e[k] + g * d[k];
                }
                d[j] = colj[i - 1];
                colj[i] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            {
                let next = v.col(i + 1);
                for k in 0..=i {
                    d[k] = next[k] / h;
                }
            }
            for j in 0..=i {
                let g: f64 = {
                    let next = v.col(i + 1);
                    let colj = v.col(j);
                    (0..=i).map(|k| next[k] * colj[k]).sum()
                };
                let colj = v.col_mut(j);
                for k in 0..=i {
                    colj[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iterations on the tridiagonal matrix `(d, e)`, rotating the
/// columns of `v` along. Eigenvalues are left unsorted in `d`.
fn tql2(v: &mut ColMajor, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (vi, vi1) = v.two_cols_mut(i);
                    for (x, y) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let hk = *y;
                        *y = s * *x + c * hk;
                        *x = c * *x - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_util::random_symmetric;

    #[test]
    fn diagonal_input() {
        let a = DenseMatrix::from_diag(&[3.0, 1.0, 2.0]);
        let eig = sym_eig(&a).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 2.0, 1.0]);
        let expected = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ]);
        assert!(eig.eigenvectors.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn identity_input() {
        let eig = sym_eig(&DenseMatrix::identity(4)).unwrap();
        for l in eig.eigenvalues {
            assert!((l - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_by_one() {
        let eig = sym_eig(&DenseMatrix::from_diag(&[-2.5])).unwrap();
        assert_eq!(eig.eigenvalues, vec![-2.5]);
        assert_eq!(eig.eigenvectors[(0, 0)], 1.0);
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..20 {
            let a = random_symmetric(8, seed);
            let eig = sym_eig(&a).unwrap();
            assert!(eig.eigenvectors.orthonormality_error() <= 1e-8);
            let err = eig.reconstruct().sub(&a).frobenius_norm();
            assert!(err <= 1e-7 * a.frobenius_norm(), "seed {seed}: {err}");
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn larger_reconstruction() {
        let a = random_symmetric(150, 99);
        let eig = sym_eig(&a).unwrap();
        assert!(eig.eigenvectors.orthonormality_error() <= 1e-8);
        assert!(eig.reconstruct().sub(&a).frobenius_norm() <= 1e-7 * a.frobenius_norm());
    }

    #[test]
    fn rejects_bad_input() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(sym_eig(&rect), Err(Error::Dimension { .. })));
        let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(sym_eig(&asym), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn inv_sqrt_examples() {
        let a = DenseMatrix::identity(2).scaled(4.0);
        let x = psd_inv_sqrt_apply(&a, 0.0, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);

        let z = DenseMatrix::zeros(3, 3);
        let g = [0.3, -1.2, 7.0];
        let x = psd_inv_sqrt_apply(&z, 1.0, &g).unwrap();
        for (xi, gi) in x.iter().zip(&g) {
            assert!((xi - gi).abs() < 1e-14);
        }

        // rank one u u^T, ||u|| = 1: (I + u u^T)^{-1} u = u / 2
        let u = [0.6, 0.0, 0.8];
        let mut a = DenseMatrix::zeros(3, 3);
        a.rank1_update(1.0, &u, &u);
        let x = psd_inv_sqrt_apply(&a, 1.0, &u).unwrap();
        for (xi, ui) in x.iter().zip(&u) {
            assert!((xi - ui / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inv_sqrt_singular() {
        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 0)] = 1.0;
        assert!(matches!(
            psd_inv_sqrt_apply(&a, 0.0, &[1.0, 1.0]),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn psd_rejects_negative() {
        let a = DenseMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(psd_eig(&a), Err(Error::NotPsd(_))));
    }
}
