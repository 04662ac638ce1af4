//! Small dense SVD and the spectral norm by power iteration.
//!
//! The SVD reduces to the triangular QR factor, then runs Golub-Kahan
//! bidiagonalization with implicit-shift QR; one-sided Jacobi is the fallback
//! when the QR iteration stalls.

use super::matrix::{canonical_sign, dot, norm, DenseMatrix};
use super::qr::{qr_decompose, QrFactors};
use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 60;
const MAX_QR_ITERS: usize = 75;
/// Relative residual norm below which a pivot column counts as dependent.
const PIVOT_RANK_TOL: f64 = 1e-13;

/// Thin SVD `B = U diag(sigma) W^T` with `r = min(m, n)` columns.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub w: DenseMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::scaled_outer(&self.u, &self.sigma, &self.w)
    }
}

/// Orthogonalizes the rows of `cols` (each row is one column vector of the
/// working matrix) by Hestenes rotations, mirroring every rotation on the
/// rows of `acc`.
fn hestenes(cols: &mut [Vec<f64>], acc: &mut [Vec<f64>]) {
    let n = cols.len();
    for _ in 0..MAX_SWEEPS {
        // Squared norms, refreshed every sweep and updated per rotation.
        let mut d: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta) = (d[i], d[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_pair(cols, i, j, c, s);
                rotate_pair(acc, i, j, c, s);
                d[i] = alpha - t * gamma;
                d[j] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }
}

#[inline]
fn rotate_pair(v: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = v.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv - s * yv;
        *y = s * xv + c * yv;
    }
}

/// Replaces the vectors listed in `missing` by unit vectors orthogonal to
/// every other vector in `basis`: each is the canonical vector with the
/// largest residual after two projection passes (first index on ties).
fn complete_basis(basis: &mut [Vec<f64>], missing: &[usize]) -> Result<()> {
    let dim = basis.first().map_or(0, Vec::len);
    for &m in missing {
        basis[m].iter_mut().for_each(|x| *x = 0.0);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            for _ in 0..2 {
                for (j, b) in basis.iter().enumerate() {
                    if j == m {
                        continue;
                    }
                    let c = dot(b, &e);
                    for (ei, bi) in e.iter_mut().zip(b) {
                        *ei -= c * bi;
                    }
                }
            }
            let ne = norm(&e);
            if best.as_ref().is_none_or(|(n, _)| ne > *n) {
                best = Some((ne, e));
            }
        }
        let (ne, mut e) = best.expect("nonempty basis");
        if !(ne > 0.0 && ne.is_finite()) {
            return Err(Error::NonFinite("singular vectors".into()));
        }
        e.iter_mut().for_each(|x| *x /= ne);
        basis[m] = e;
    }
    Ok(())
}

/// Modified Gram-Schmidt with column pivoting and one reorthogonalization
/// pass: `A P = Q R`, returned with `perm[k]` the column of `A` in position
/// `k`. Columns dependent on the earlier ones get a zero row in `R` and a
/// canonical completion vector in `Q`.
fn pivoted_qr(a: &DenseMatrix) -> (QrFactors, Vec<usize>) {
    let (m, n) = (a.rows(), a.cols());
    let mut work: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = DenseMatrix::zeros(n, n);
    let tol = PIVOT_RANK_TOL * a.frobenius_norm();
    let mut deficient = false;
    for k in 0..n {
        if !deficient {
            let (best, _) = (k..n)
                .map(|j| (j, dot(&work[j], &work[j])))
                .fold((k, -1.0), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
            work.swap(k, best);
            perm.swap(k, best);
            for i in 0..k {
                let t = r[(i, k)];
                r[(i, k)] = r[(i, best)];
                r[(i, best)] = t;
            }
            let mut v = work[k].clone();
            // Second pass against earlier directions; its coefficients
            // belong to R as well.
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[(i, k)] += c;
                for (x, y) in v.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
            let nv = norm(&v);
            if nv > tol && nv > 0.0 {
                r[(k, k)] = nv;
                v.iter_mut().for_each(|x| *x /= nv);
                for j in (k + 1)..n {
                    let c = dot(&v, &work[j]);
                    r[(k, j)] = c;
                    for (x, y) in work[j].iter_mut().zip(&v) {
                        *x -= c * y;
                    }
                }
                q.push(v);
                continue;
            }
            deficient = true;
        } else {
            // Coefficients of a dependent column on the earlier directions.
            for (i, qi) in q.iter().enumerate() {
                r[(i, k)] += dot(qi, &work[k]);
            }
        }
        // Remaining columns lie in span(Q); complete Q with the canonical
        // vector farthest from it.
        let best = (0..m)
            .map(|i| (i, q.iter().map(|c| c[i] * c[i]).sum::<f64>()))
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
            .0;
        let mut e = vec![0.0; m];
        e[best] = 1.0;
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &e);
                for (x, y) in e.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
        }
        let ne = norm(&e);
        e.iter_mut().for_each(|x| *x /= ne);
        q.push(e);
    }
    (QrFactors { q: DenseMatrix::from_cols(m, &q), r }, perm)
}

/// Jacobi SVD of a tall matrix (`m >= n`) as `(U, sigma, W)`, sigma
/// descending.
///
/// `A P = Q R` with column pivoting, then Jacobi on `R^T`: `R^T J = W' Σ`
/// gives `A = (Q J) Σ (P W')^T`. The pivoted triangular factor is graded,
/// which keeps the sweep count low.
fn svd_tall_jacobi(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let n = a.cols();
    let (f, perm) = pivoted_qr(a);

    // Columns of R^T are the rows of R.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|i| f.r.row(i).to_vec()).collect();
    let mut acc: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    hestenes(&mut cols, &mut acc);

    let mut sigma: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let top = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut missing = Vec::new();
    for (j, c) in cols.iter_mut().enumerate() {
        if sigma[j] > f64::EPSILON * top * (n as f64) && sigma[j] > 0.0 {
            let s = sigma[j];
            c.iter_mut().for_each(|x| *x /= s);
        } else {
            sigma[j] = 0.0;
            missing.push(j);
        }
    }
    complete_basis(&mut cols, &missing)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let j_sorted = DenseMatrix::from_cols(n, &order.iter().map(|&k| acc[k].clone()).collect::<Vec<_>>());
    let mut u = f.q.matmul(&j_sorted);
    let mut w = DenseMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        for (r, &orig) in perm.iter().enumerate() {
            w[(orig, c)] = cols[k][r];
        }
    }
    let sigma: Vec<f64> = order.iter().map(|&k| sigma[k]).collect();

    for j in 0..n {
        let mut uc = u.col(j);
        if canonical_sign(&mut uc) < 0.0 {
            u.set_col(j, &uc);
            let wc: Vec<f64> = w.col(j).iter().map(|x| -x).collect();
            w.set_col(j, &wc);
        }
    }
    Ok((u, sigma, w))
}

/// Golub-Kahan-Reinsch SVD of a column-major `m×n` matrix, `m >= n`. Returns
/// `(U^T, sigma, V^T)` unsorted and row-major (`U^T` is n×m), with
/// `A = U diag(sigma) V^T`, or `None` if the QR iteration does not converge.
fn golub_kahan(mut a: Vec<f64>, m: usize, n: usize) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    debug_assert!(m >= n && a.len() == m * n);
    let idx = |i: usize, j: usize| j * m + i;
    let vdx = |i: usize, j: usize| j * n + i;
    let mut w = vec![0.0; n];
    let mut rv1 = vec![0.0; n];
    let mut v = vec![0.0; n * n];
    let mut sv = vec![0.0; m];
    let (mut g, mut scale, mut anorm) = (0.0f64, 0.0f64, 0.0f64);
    // Columns or rows this small are flushed to zero; reflecting them loses all accuracy.
    let floor = a.iter().fold(0.0f64, |m, x| m.max(x.abs())) * f64::EPSILON * f64::EPSILON;

    // Householder reduction to bidiagonal form.
    for i in 0..n {
        let l = i + 1;
        rv1[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        let mut s = 0.0;
        let ci = i * m;
        scale += a[ci + i..ci + m].iter().map(|x| x.abs()).sum::<f64>();
        if scale <= floor {
            scale = 0.0;
            a[ci + i..ci + m].iter_mut().for_each(|x| *x = 0.0);
        }
        if scale != 0.0 {
            for x in &mut a[ci + i..ci + m] {
                *x /= scale;
                s += *x * *x;
            }
            let f = a[idx(i, i)];
            g = -s.sqrt().copysign(f);
            let h = f * g - s;
            a[idx(i, i)] = f - g;
            let (head, tail) = a.split_at_mut(l * m);
            let col_i = &head[ci + i..ci + m];
            for cj in tail.chunks_exact_mut(m) {
                let col_j = &mut cj[i..];
                let f = dot(col_i, col_j) / h;
                for (x, y) in col_j.iter_mut().zip(col_i) {
                    *x += f * y;
                }
            }
            a[ci + i..ci + m].iter_mut().for_each(|x| *x *= scale);
        }
        w[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        let mut s = 0.0;
        if i + 1 != n {
            for k in l..n {
                scale += a[idx(i, k)].abs();
            }
            if scale <= floor {
                scale = 0.0;
                for k in l..n {
                    a[idx(i, k)] = 0.0;
                }
            }
            if scale != 0.0 {
                for k in l..n {
                    a[idx(i, k)] /= scale;
                    s += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                g = -s.sqrt().copysign(f);
                let h = f * g - s;
                a[idx(i, l)] = f - g;
                for k in l..n {
                    rv1[k] = a[idx(i, k)] / h;
                }
                // Rows l..m: s_j = <row j, row i>, then row j += s_j rv1.
                sv[l..m].iter_mut().for_each(|x| *x = 0.0);
                for k in l..n {
                    let aik = a[idx(i, k)];
                    for (x, y) in sv[l..m].iter_mut().zip(&a[k * m + l..(k + 1) * m]) {
                        *x += y * aik;
                    }
                }
                for k in l..n {
                    let r = rv1[k];
                    for (y, x) in a[k * m + l..(k + 1) * m].iter_mut().zip(&sv[l..m]) {
                        *y += x * r;
                    }
                }
                for k in l..n {
                    a[idx(i, k)] *= scale;
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }

    // Right-hand transformations.
    let mut l = n;
    for i in (0..n).rev() {
        if i + 1 < n {
            if g != 0.0 {
                for j in l..n {
                    v[vdx(j, i)] = (a[idx(i, j)] / a[idx(i, l)]) / g;
                }
                for j in l..n {
                    let mut s = 0.0;
                    for k in l..n {
                        s += a[idx(i, k)] * v[vdx(k, j)];
                    }
                    let (head, tail) = v.split_at_mut(j * n);
                    let col_i = &head[i * n + l..(i + 1) * n];
                    for (x, y) in tail[l..n].iter_mut().zip(col_i) {
                        *x += s * y;
                    }
                }
            }
            for j in l..n {
                v[vdx(i, j)] = 0.0;
                v[vdx(j, i)] = 0.0;
            }
        }
        v[vdx(i, i)] = 1.0;
        g = rv1[i];
        l = i;
    }

    // Left-hand transformations, in place in `a`.
    for i in (0..n).rev() {
        let l = i + 1;
        let g = w[i];
        for j in l..n {
            a[idx(i, j)] = 0.0;
        }
        let ci = i * m;
        if g != 0.0 {
            let g = 1.0 / g;
            let aii = a[idx(i, i)];
            let (head, tail) = a.split_at_mut(l * m);
            let col_i = &head[ci + i..ci + m];
            for cj in tail[..(n - l) * m].chunks_exact_mut(m) {
                let f = (dot(&col_i[1..], &cj[l..]) / aii) * g;
                for (x, y) in cj[i..].iter_mut().zip(col_i) {
                    *x += f * y;
                }
            }
            a[ci + i..ci + m].iter_mut().for_each(|x| *x *= g);
        } else {
            a[ci + i..ci + m].iter_mut().for_each(|x| *x = 0.0);
        }
        a[idx(i, i)] += 1.0;
    }

    // Rotations act on columns of U and V, which the column-major storage
    // already holds as rows of the transposes.
    let mut ut = a;
    let mut vt = v;
    let negligible = |x: f64| x.abs() <= f64::EPSILON * anorm;

    // Diagonalization of the bidiagonal form.
    for k in (0..n).rev() {
        let mut its = 0;
        loop {
            let mut l = k;
            let mut split = false;
            loop {
                if negligible(rv1[l]) || l == 0 {
                    split = true;
                    break;
                }
                if negligible(w[l - 1]) {
                    break;
                }
                l -= 1;
            }
            if !split {
                // Cancel rv1[l] when w[l-1] is negligible.
                let nm = l - 1;
                let (mut c, mut s) = (0.0, 1.0);
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if negligible(f) {
                        break;
                    }
                    let g = w[i];
                    let h = f.hypot(g);
                    w[i] = h;
                    c = g / h;
                    s = -f / h;
                    rotate_rows(&mut ut, m, nm, i, c, s);
                }
            }
            let z = w[k];
            if l == k {
                if z < 0.0 {
                    w[k] = -z;
                    vt[k * n..(k + 1) * n].iter_mut().for_each(|x| *x = -*x);
                }
                break;
            }
            if its == MAX_QR_ITERS {
                return None;
            }
            its += 1;
            // Shift from the trailing 2x2 block.
            let mut x = w[l];
            let nm = k - 1;
            let mut y = w[nm];
            let mut g = rv1[nm];
            let mut h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + g.copysign(f))) - h)) / x;
            let (mut c, mut s) = (1.0, 1.0);
            for j in l..=nm {
                let i = j + 1;
                g = rv1[i];
                y = w[i];
                h = s * g;
                g *= c;
                let mut z = f.hypot(h);
                rv1[j] = z;
                c = f / z;
                s = h / z;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                rotate_rows(&mut vt, n, j, i, c, s);
                z = f.hypot(h);
                w[j] = z;
                if z != 0.0 {
                    c = f / z;
                    s = h / z;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                rotate_rows(&mut ut, m, j, i, c, s);
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
    }
    let finite = |x: &[f64]| x.iter().all(|v| v.is_finite());
    (finite(&ut) && finite(&w) && finite(&vt)).then_some((ut, w, vt))
}


/// Rows `(p, q)` of a row-major `n`-column matrix become
/// `(c r_p + s r_q, c r_q - s r_p)`.
#[inline]
fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (lo, hi) = m.split_at_mut(q * n);
    for (x, y) in lo[p * n..(p + 1) * n].iter_mut().zip(&mut hi[..n]) {
        let (xv, yv) = (*x, *y);
        *x = xv * c + yv * s;
        *y = yv * c - xv * s;
    }
}

/// SVD of a tall matrix (`m >= n`) as `(U, sigma, W)`, sigma descending, by
/// Golub-Kahan. Matrices more than twice as tall as wide are first reduced
/// to their triangular QR factor: `A = Q R`, `R = U_R Σ W^T`, `U = Q U_R`.
fn svd_tall(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = (a.rows(), a.cols());
    // Column-major data is the row-major data of the transpose.
    let (q, rows, r) = if m <= 2 * n {
        (None, m, a.transpose().into_vec())
    } else {
        let f = qr_decompose(a)?;
        (Some(f.q), n, f.r.transpose().into_vec())
    };
    let Some((ut, sigma, vt)) = golub_kahan(r, rows, n) else {
        return svd_tall_jacobi(a);
    };
    let top = sigma.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let u_r = DenseMatrix::from_fn(rows, n, |i, c| ut[order[c] * rows + i]);
    let mut u = match q {
        Some(q) => q.matmul(&u_r),
        None => u_r,
    };
    let mut w = DenseMatrix::from_fn(n, n, |i, c| vt[order[c] * n + i]);
    let sigma: Vec<f64> = order
        .iter()
        .map(|&k| if sigma[k] > f64::EPSILON * top * (n as f64) { sigma[k] } else { 0.0 })
        .collect();
    for j in 0..n {
        let mut uc = u.col(j);
        if canonical_sign(&mut uc) < 0.0 {
            u.set_col(j, &uc);
            let wc: Vec<f64> = w.col(j).iter().map(|x| -x).collect();
            w.set_col(j, &wc);
        }
    }
    Ok((u, sigma, w))
}

/// Thin SVD of an m×n matrix: `U` (m×r) and `W` (n×r) column-orthonormal,
/// `sigma` descending and nonnegative, `r = min(m, n)`.
pub fn svd_small(b: &DenseMatrix) -> Result<SvdFactors> {
    if b.rows() == 0 || b.cols() == 0 {
        return Err(Error::dim(
            "svd_small",
            format!("empty {}x{} matrix", b.rows(), b.cols()),
        ));
    }
    if !b.is_finite() {
        return Err(Error::NonFinite("svd_small input".into()));
    }
    // A power-of-two scale near max-abs keeps squared norms away from
    // overflow without rounding the entries.
    let scale = Some(b.max_abs()).filter(|s| s.is_normal()).map_or(1.0, |s| 2f64.powi(s.log2().floor() as i32));
    let scaled = b.scaled(1.0 / scale);
    let (u, mut sigma, w) = if b.rows() >= b.cols() {
        svd_tall(&scaled)?
    } else {
        let (w, sigma, u) = svd_tall(&scaled.transpose())?;
        (u, sigma, w)
    };
    sigma.iter_mut().for_each(|x| *x *= scale);
    Ok(SvdFactors { u, sigma, w })
}

/// Largest singular value, by power iteration on `A^T A`.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 || a.max_abs() == 0.0 {
        return 0.0;
    }
    // Fixed, generic start vector.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut lambda = 0.0f64;
    for _ in 0..20_000 {
        let y = a.matvec(&x);
        let z = a.t_matvec(&y);
        let next = dot(&x, &z);
        let nz = norm(&z);
        if nz == 0.0 {
            return 0.0;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Final Rayleigh quotient ||A x|| with the converged unit vector.
    norm(&a.matvec(&x)).max(lambda.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig::sym_eig;
    use crate::linalg::test_util::{random_matrix, random_psd};

    fn assert_valid(f: &SvdFactors, b: &DenseMatrix) {
        assert!(f.u.orthonormality_error() < 1e-10);
        assert!(f.w.orthonormality_error() < 1e-10);
        assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.sigma.iter().all(|&s| s >= 0.0));
        let err = f.reconstruct().sub(b).frobenius_norm();
        assert!(err <= 1e-7 * b.frobenius_norm().max(f64::MIN_POSITIVE) || err == 0.0);
    }

    #[test]
    fn diagonal() {
        let f = svd_small(&DenseMatrix::from_diag(&[5.0, 3.0])).unwrap();
        assert_eq!(f.sigma, vec![5.0, 3.0]);
    }

    #[test]
    fn zero_matrix() {
        let b = DenseMatrix::zeros(4, 3);
        let f = svd_small(&b).unwrap();
        assert_eq!(f.sigma, vec![0.0; 3]);
        assert!(f.u.orthonormality_error() < 1e-12);
        assert!(f.w.orthonormality_error() < 1e-12);
    }

    #[test]
    fn shapes_and_reconstruction() {
        for (m, n, seed) in [(6, 6, 1), (10, 3, 2), (3, 10, 3), (1, 5, 4), (7, 1, 5)] {
            let b = random_matrix(m, n, seed);
            let f = svd_small(&b).unwrap();
            assert_eq!(f.u.rows(), m);
            assert_eq!(f.w.rows(), n);
            assert_eq!(f.sigma.len(), m.min(n));
            assert_valid(&f, &b);
        }
    }

    #[test]
    fn rank_deficient() {
        let b = random_psd(8, 3, 11);
        let f = svd_small(&b).unwrap();
        assert_valid(&f, &b);
        assert!(f.sigma[3] < 1e-12 * f.sigma[0]);
    }

    #[test]
    fn psd_matches_eigenvalues() {
        let b = random_psd(6, 6, 21);
        let f = svd_small(&b).unwrap();
        let eig = sym_eig(&b).unwrap();
        for (s, l) in f.sigma.iter().zip(&eig.eigenvalues) {
            assert!((s - l).abs() <= 1e-8 * l.abs().max(1.0), "{s} vs {l}");
        }
    }

    #[test]
    fn spectral_norm_cases() {
        assert!((spectral_norm(&DenseMatrix::from_diag(&[7.0, 2.0])) - 7.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 3)), 0.0);
        for seed in 0..5 {
            let a = random_matrix(10, 10, 40 + seed);
            let s1 = svd_small(&a).unwrap().sigma[0];
            let s = spectral_norm(&a);
            assert!((s - s1).abs() <= 1e-6 * s1, "{s} vs {s1}");
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(svd_small(&DenseMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn rank_one_square_completes_basis() {
        let v: Vec<f64> = (0..35).map(|i| 1.0 + (i % 3) as f64).collect();
        let b = DenseMatrix::from_fn(35, 35, |i, j| v[i] * v[j]);
        let f = svd_small(&b).unwrap();
        assert_valid(&f, &b);
        assert!(f.sigma[1] < 1e-12 * f.sigma[0]);
    }

    #[test]
    fn golub_kahan_agrees_with_jacobi() {
        for (m, n, seed) in [(9, 9, 51), (20, 7, 52), (40, 12, 53), (15, 9, 56), (24, 13, 57)] {
            let a = random_matrix(m, n, seed);
            let gk = svd_small(&a).unwrap();
            let (_, sj, _) = svd_tall_jacobi(&a).unwrap();
            assert_valid(&gk, &a);
            for (x, y) in gk.sigma.iter().zip(&sj) {
                assert!((x - y).abs() <= 1e-12 * sj[0], "{x} vs {y}");
            }
        }
        let b = random_psd(12, 4, 54);
        let gk = svd_small(&b).unwrap();
        let (_, sj, _) = svd_tall_jacobi(&b).unwrap();
        assert_valid(&gk, &b);
        assert!(gk.sigma[4..].iter().all(|&s| s < 1e-12 * gk.sigma[0]));
        for (x, y) in gk.sigma.iter().zip(&sj).take(4) {
            assert!((x - y).abs() <= 1e-12 * sj[0]);
        }
    }

    #[test]
    fn rank_deficient_rectangular() {
        let a = random_matrix(18, 3, 58);
        let b = random_matrix(3, 11, 59);
        let c = a.matmul(&b);
        let f = svd_small(&c).unwrap();
        assert_valid(&f, &c);
        assert!(f.sigma[3..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn graded_spectrum() {
        let spec: Vec<f64> = (1..=30).map(|j| 10f64.powi(-(j as i32) / 3)).collect();
        let mut rng = crate::rng::seeded(55);
        let a = crate::linalg::random::random_psd_with_spectrum(30, &spec, &mut rng);
        let f = svd_small(&a).unwrap();
        assert_valid(&f, &a);
        for (s, l) in f.sigma.iter().zip(&spec) {
            assert!((s - l).abs() <= 1e-13, "{s} vs {l}");
        }
    }
}
