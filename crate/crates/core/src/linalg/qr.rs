//! Thin QR factorization and Givens-rotation rank-1 updates.

use super::matrix::{axpy, dot, norm, DenseMatrix};
use crate::error::{Error, Result};

/// Relative size below which an `R` diagonal entry counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Thin QR factors `A = Q R` with `Q` (p×ℓ) column-orthonormal and `R` (ℓ×ℓ)
/// upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

impl QrFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.q.matmul(&self.r)
    }

    /// Factors of the p×ℓ zero matrix: `R = 0` and `Q` the fallback basis.
    pub fn zero(p: usize, ell: usize) -> Result<Self> {
        qr_decompose(&DenseMatrix::zeros(p, ell))
    }
}

/// Orthogonalizes `v` against the columns `q` twice (CGS2), accumulating
/// the projection coefficients into `coeffs`.
fn orthogonalize(q: &[Vec<f64>], v: &mut [f64], coeffs: &mut [f64]) {
    for _ in 0..2 {
        for (qj, cj) in q.iter().zip(coeffs.iter_mut()) {
            let c = dot(qj, v);
            axpy(-c, qj, v);
            *cj += c;
        }
    }
}

/// Thin QR of a p×ℓ matrix with `p >= ℓ`, by classical Gram-Schmidt with
/// reorthogonalization.
///
/// Diagonal entries of `R` are nonnegative. When a column is numerically
/// dependent on the previous ones (`r_jj <= 1e-12 ||A||_F`), its `Q` column is
/// the orthogonalized canonical basis vector farthest from the span so far
/// and `r_jj` is set to zero.
pub fn qr_decompose(a: &DenseMatrix) -> Result<QrFactors> {
    let (p, ell) = (a.rows(), a.cols());
    if p < ell {
        return Err(Error::dim(
            "qr_decompose",
            format!("need rows >= cols, got {p}x{ell}"),
        ));
    }
    let tol = RANK_TOL * a.frobenius_norm();
    let at = a.transpose();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(ell);
    let mut r = DenseMatrix::zeros(ell, ell);
    let mut coeffs = vec![0.0; ell];

    for j in 0..ell {
        let mut v = at.row(j).to_vec();
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        orthogonalize(&q, &mut v, &mut coeffs);
        for (i, c) in coeffs.iter().take(j).enumerate() {
            r[(i, j)] = *c;
        }
        let nv = norm(&v);
        if nv > tol && nv > 0.0 {
            r[(j, j)] = nv;
            v.iter_mut().for_each(|x| *x /= nv);
            q.push(v);
            continue;
        }
        // Rank-deficient column: the canonical vector with the largest
        // component outside span(Q), i.e. the smallest row norm of Q (first
        // index on ties). Its residual norm is at least sqrt((p - j) / p).
        let mut best = 0;
        let mut best_norm = f64::INFINITY;
        for i in 0..p {
            let rn: f64 = q.iter().map(|c| c[i] * c[i]).sum();
            if rn < best_norm {
                best_norm = rn;
                best = i;
            }
        }
        let mut e = vec![0.0; p];
        e[best] = 1.0;
        let mut scratch = vec![0.0; ell];
        orthogonalize(&q, &mut e, &mut scratch);
        let ne = norm(&e);
        e.iter_mut().for_each(|x| *x /= ne);
        q.push(e);
    }
    Ok(QrFactors { q: DenseMatrix::from_cols(p, &q), r })
}

/// Plane rotation `[c s; -s c]` mapping `(a, b)` to `(r, 0)`; the identity
/// when `b` is already zero.
#[inline]
fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (1.0, 0.0, a)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

/// Applies the rotation to rows `i` and `i + 1` of `m`.
#[inline]
fn rotate_rows(m: &mut DenseMatrix, i: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (top, bottom) = data[i * cols..(i + 2) * cols].split_at_mut(cols);
    for (x, y) in top.iter_mut().zip(bottom.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv + s * yv;
        *y = -s * xv + c * yv;
    }
}

/// Applies the transposed rotation to columns `j` and `j + 1` of `m`, so that
/// `Q R` is preserved when `R` receives [`rotate_rows`].
#[inline]
fn rotate_cols(m: &mut DenseMatrix, j: usize, c: f64, s: f64) {
    let cols = m.cols();
    for row in m.as_mut_slice().chunks_exact_mut(cols) {
        let (xv, yv) = (row[j], row[j + 1]);
        row[j] = c * xv + s * yv;
        row[j + 1] = -s * xv + c * yv;
    }
}

/// QR factors of `A + u v^T` given factors of `A`, in O(pℓ + ℓ²).
///
/// The component of `u` outside `range(Q)` temporarily extends the basis by
/// one column; Givens rotations then reduce the update to the first row,
/// and a second sweep restores triangularity of the resulting Hessenberg
/// matrix. The trailing (zero) row and extra column are dropped.
pub fn qr_rank1_update(f: &QrFactors, u: &[f64], v: &[f64]) -> Result<QrFactors> {
    let (p, ell) = (f.q.rows(), f.q.cols());
    if u.len() != p || v.len() != ell || f.r.rows() != ell || f.r.cols() != ell {
        return Err(Error::dim(
            "qr_rank1_update",
            format!(
                "Q is {p}x{ell}, R is {}x{}, u has {}, v has {}",
                f.r.rows(),
                f.r.cols(),
                u.len(),
                v.len()
            ),
        ));
    }
    if ell == 0 {
        return Ok(f.clone());
    }

    // w = Q^T u, residual = u - Q w (twice for orthogonality).
    let mut w = f.q.t_matvec(u);
    let mut resid = u.to_vec();
    let qw = f.q.matvec(&w);
    for (r, x) in resid.iter_mut().zip(&qw) {
        *r -= x;
    }
    let w2 = f.q.t_matvec(&resid);
    let qw2 = f.q.matvec(&w2);
    for (r, x) in resid.iter_mut().zip(&qw2) {
        *r -= x;
    }
    axpy(1.0, &w2, &mut w);
    let rho = norm(&resid);
    let unorm = norm(u);
    let extend = p > ell && rho > 1e-14 * unorm.max(f64::MIN_POSITIVE);

    let n = if extend { ell + 1 } else { ell };
    let mut q = DenseMatrix::zeros(p, n);
    for i in 0..p {
        q.row_mut(i)[..ell].copy_from_slice(f.q.row(i));
        if extend {
            q[(i, ell)] = resid[i] / rho;
        }
    }
    let mut r = DenseMatrix::zeros(n, ell);
    for i in 0..ell {
        r.row_mut(i).copy_from_slice(f.r.row(i));
    }
    if extend {
        w.push(rho);
    }

    // Sweep 1: fold w onto its first entry, bottom-up; R becomes Hessenberg.
    for k in (1..n).rev() {
        let (c, s, rr) = givens(w[k - 1], w[k]);
        w[k - 1] = rr;
        w[k] = 0.0;
        rotate_rows(&mut r, k - 1, c, s);
        rotate_cols(&mut q, k - 1, c, s);
    }

    // Rank-1 term now lives in the first row only.
    axpy(w[0], v, r.row_mut(0));

    // Sweep 2: remove the subdiagonal.
    for k in 0..(n - 1).min(ell) {
        let (c, s, _) = givens(r[(k, k)], r[(k + 1, k)]);
        rotate_rows(&mut r, k, c, s);
        r[(k + 1, k)] = 0.0;
        rotate_cols(&mut q, k, c, s);
    }

    let q = if extend { q.leading_cols(ell) } else { q };
    let r = if extend {
        DenseMatrix::from_fn(ell, ell, |i, j| if j >= i { r[(i, j)] } else { 0.0 })
    } else {
        for i in 1..ell {
            for j in 0..i {
                r[(i, j)] = 0.0;
            }
        }
        r
    };
    Ok(QrFactors { q, r })
}

/// `||Q R - A||_F`.
pub fn reconstruction_error(f: &QrFactors, a: &DenseMatrix) -> f64 {
    f.reconstruct().sub(a).frobenius_norm()
}
