//! Randomized range finding and low-rank SVD of the gradient outer-product
//! accumulator, along both the dense path (full `G` available) and the
//! sketched path (only `G Π^T` kept).

use crate::error::{Error, Result};
use crate::linalg::{qr_decompose, spectral_norm, svd_small, DenseMatrix, QrFactors};
use crate::sketch::SrftSketch;

/// Accumulator spectrum entries at or below this fraction of the largest are
/// treated as zero by every pseudo-inverse.
pub const PINV_REL_TOL: f64 = 1e-10;

/// Running `G̃_t = Σ_i g_i (Π g_i)^T`, a p×ℓ matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchAccumulator {
    g_sketch: DenseMatrix,
    t: usize,
}

impl SketchAccumulator {
    pub fn new(p: usize, ell: usize) -> Self {
        SketchAccumulator {
            g_sketch: DenseMatrix::zeros(p, ell),
            t: 0,
        }
    }

    pub fn g_sketch(&self) -> &DenseMatrix {
        &self.g_sketch
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `G̃ += g g̃^T`.
    pub fn accumulate(&mut self, g: &[f64], g_sketched: &[f64]) -> Result<()> {
        if g.len() != self.g_sketch.rows() || g_sketched.len() != self.g_sketch.cols() {
            return Err(Error::dim(
                "accumulate",
                format!(
                    "accumulator is {}x{}, got g of {} and sketch of {}",
                    self.g_sketch.rows(),
                    self.g_sketch.cols(),
                    g.len(),
                    g_sketched.len()
                ),
            ));
        }
        self.g_sketch.rank1_update(1.0, g, g_sketched);
        self.t += 1;
        Ok(())
    }
}

/// `V` (p×τ, orthonormal columns) and `sigma` (τ, descending) of a low-rank
/// approximation `V diag(sigma) V^T` of the accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub v: DenseMatrix,
    pub sigma: Vec<f64>,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::scaled_outer(&self.v, &self.sigma, &self.v)
    }

    /// Number of leading entries of `sigma` above the pseudo-inverse cutoff.
    pub fn active_rank(&self) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma
            .iter()
            .take_while(|&&s| s > 0.0 && s > PINV_REL_TOL * top)
            .count()
    }
}

fn truncate(v: &DenseMatrix, sigma: &[f64], tau: usize) -> LowRankFactors {
    let keep = tau.min(v.cols());
    let mut s: Vec<f64> = sigma[..keep].to_vec();
    s.resize(tau, 0.0);
    let v = if keep == v.cols() && keep == tau {
        v.clone()
    } else {
        let mut out = DenseMatrix::zeros(v.rows(), tau);
        for i in 0..v.rows() {
            out.row_mut(i)[..keep].copy_from_slice(&v.row(i)[..keep]);
        }
        out
    };
    LowRankFactors { v, sigma: s }
}

fn check_dense_input(g: &DenseMatrix, op: &'static str) -> Result<()> {
    if !g.is_square() {
        return Err(Error::dim(op, format!("G is {}x{}", g.rows(), g.cols())));
    }
    let asym = g.asymmetry();
    if asym > 1e-10 * (1.0 + g.max_abs()) {
        return Err(Error::NotSymmetric(asym));
    }
    // Cheap necessary condition for PSD; a full spectrum check would cost the
    // O(p^3) this path exists to avoid.
    let min_diag = g.diag().into_iter().fold(f64::INFINITY, f64::min);
    if min_diag < -1e-10 * (1.0 + g.max_abs()) {
        return Err(Error::NotPsd(min_diag));
    }
    Ok(())
}

/// Low-rank SVD of `G` inside the span of a given orthonormal basis `Q`:
/// `B = Q^T G`, `U Σ W^T = B`, `V = W` truncated to `tau` columns.
pub fn svd_in_basis(g: &DenseMatrix, q: &DenseMatrix, tau: usize) -> Result<LowRankFactors> {
    if q.rows() != g.rows() || q.cols() < tau {
        return Err(Error::dim(
            "svd_in_basis",
            format!("G is {}x{}, Q is {}x{}, tau = {tau}", g.rows(), g.cols(), q.rows(), q.cols()),
        ));
    }
    let b = q.t_matmul(g);
    let svd = svd_small(&b)?;
    Ok(truncate(&svd.w, &svd.sigma, tau))
}

/// Range basis of `G` from the sketch: `Q` of `qr(G Π^T)`.
pub fn sketched_range(g: &DenseMatrix, sketch: &SrftSketch) -> Result<DenseMatrix> {
    let y = sketch.apply_rows(g)?;
    Ok(qr_decompose(&y)?.q)
}

/// Dense-path randomized SVD: project, orthonormalize, solve the small
/// problem, truncate to `tau`.
pub fn randomized_svd_dense(
    g: &DenseMatrix,
    sketch: &SrftSketch,
    tau: usize,
) -> Result<LowRankFactors> {
    check_dense_input(g, "randomized_svd_dense")?;
    if g.rows() != sketch.p() || tau > sketch.ell() {
        return Err(Error::dim(
            "randomized_svd_dense",
            format!("G is {}x{}, sketch {}->{}, tau = {tau}", g.rows(), g.cols(), sketch.p(), sketch.ell()),
        ));
    }
    let q = sketched_range(g, sketch)?;
    svd_in_basis(g, &q, tau)
}

/// Sketched-path randomized SVD from the accumulator and current QR factors
/// of `G̃`: `B = G̃^T Q` (ℓ×ℓ), `U Σ W^T = B`, `V = Q W` truncated to `tau`.
pub fn randomized_svd_sketched(
    acc: &SketchAccumulator,
    qr: &QrFactors,
    tau: usize,
) -> Result<LowRankFactors> {
    let gs = acc.g_sketch();
    if qr.q.rows() != gs.rows() || qr.q.cols() != gs.cols() || tau > gs.cols() {
        return Err(Error::dim(
            "randomized_svd_sketched",
            format!(
                "accumulator {}x{}, Q {}x{}, tau = {tau}",
                gs.rows(),
                gs.cols(),
                qr.q.rows(),
                qr.q.cols()
            ),
        ));
    }
    let b = gs.t_matmul(&qr.q);
    let svd = svd_small(&b)?;
    let w = svd.w.leading_cols(tau.min(svd.w.cols()));
    let v = qr.q.matmul(&w);
    Ok(truncate(&v, &svd.sigma, tau))
}

/// Stale-factor detection: `||Q R - G̃||_F <= 1e-6 (1 + ||G̃||_F)`.
pub fn check_qr_current(acc: &SketchAccumulator, qr: &QrFactors) -> Result<()> {
    let err = qr.reconstruct().sub(acc.g_sketch()).frobenius_norm();
    let bound = 1e-6 * (1.0 + acc.g_sketch().frobenius_norm());
    if err > bound {
        return Err(Error::NonFinite(format!(
            "QR factors out of date with the accumulator: residual {err:e} > {bound:e}"
        )));
    }
    Ok(())
}

/// Error radius `sqrt(1 + 7p/τ) · σ_{k+1}` of the structured range finder.
pub fn approx_error_radius(p: usize, tau: usize, sigma_kplus1: f64) -> f64 {
    assert!(tau >= 1 && p >= tau && sigma_kplus1 >= 0.0);
    (1.0 + 7.0 * p as f64 / tau as f64).sqrt() * sigma_kplus1
}

/// Smallest projection dimension `4 (sqrt(k) + sqrt(8 ln(k n)))^2` for which
/// the range-finder guarantee applies.
pub fn min_projection_dim(k: usize, n: usize) -> f64 {
    let k = k as f64;
    4.0 * (k.sqrt() + (8.0 * (k * n as f64).ln()).sqrt()).powi(2)
}

/// `||G - Q Q^T G||_2`.
pub fn range_error(g: &DenseMatrix, q: &DenseMatrix) -> f64 {
    if q.cols() == 0 {
        return spectral_norm(g);
    }
    let proj = q.matmul(&q.t_matmul(g));
    spectral_norm(&g.sub(&proj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_psd_with_spectrum;
    use crate::linalg::{dot, norm, sym_eig};
    use crate::rng::seeded;
    use crate::sketch::srft_new;

    #[test]
    fn accumulate_rank_one() {
        let mut acc = SketchAccumulator::new(3, 4);
        acc.accumulate(&[1.0, 0.0, 0.0], &[1.0; 4]).unwrap();
        assert_eq!(acc.g_sketch().row(0), &[1.0; 4]);
        assert_eq!(acc.g_sketch().row(1), &[0.0; 4]);
        assert_eq!(acc.t(), 1);
        assert!(acc.accumulate(&[1.0; 2], &[1.0; 4]).is_err());
    }

    #[test]
    fn accumulate_commutes() {
        let (ga, sa) = (vec![1.0, 2.0], vec![0.5, -1.0, 3.0]);
        let (gb, sb) = (vec![-0.5, 4.0], vec![2.0, 0.0, 1.0]);
        let mut x = SketchAccumulator::new(2, 3);
        x.accumulate(&ga, &sa).unwrap();
        x.accumulate(&gb, &sb).unwrap();
        let mut y = SketchAccumulator::new(2, 3);
        y.accumulate(&gb, &sb).unwrap();
        y.accumulate(&ga, &sa).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn accumulate_matches_brute_force() {
        let mut rng = seeded(3);
        let s = srft_new(12, 3, 2, 1).unwrap();
        let mut acc = SketchAccumulator::new(12, 5);
        let mut brute = vec![vec![0.0; 5]; 12];
        for _ in 0..20 {
            let g = crate::linalg::random::gaussian_vec(12, &mut rng);
            let gs = s.apply(&g).unwrap();
            acc.accumulate(&g, &gs).unwrap();
            for i in 0..12 {
                for j in 0..5 {
                    brute[i][j] += g[i] * gs[j];
                }
            }
        }
        let brute = DenseMatrix::from_rows(&brute);
        assert!(acc.g_sketch().sub(&brute).max_abs() <= 1e-12);
    }

    #[test]
    fn dense_zero_input() {
        let s = srft_new(6, 2, 2, 0).unwrap();
        let f = randomized_svd_dense(&DenseMatrix::zeros(6, 6), &s, 2).unwrap();
        assert_eq!(f.sigma, vec![0.0, 0.0]);
        assert_eq!(f.v, DenseMatrix::identity(6).leading_cols(2));
    }

    #[test]
    fn dense_rank_two_recovery() {
        let g = random_psd_with_spectrum(8, &[5.0, 2.0], &mut seeded(5));
        let s = srft_new(8, 4, 2, 11).unwrap();
        let f = randomized_svd_dense(&g, &s, 4).unwrap();
        let exact = sym_eig(&g).unwrap().eigenvalues;
        assert!((f.sigma[0] - exact[0]).abs() <= 1e-6 * exact[0]);
        assert!((f.sigma[1] - exact[1]).abs() <= 1e-6 * exact[1]);
        assert!(f.sigma[2] <= 1e-8 && f.sigma[3] <= 1e-8);
        assert!(f.v.orthonormality_error() <= 1e-6);
        let err = f.reconstruct().sub(&g).frobenius_norm();
        assert!(err <= 1e-6 * g.frobenius_norm());
    }

    #[test]
    fn dense_power_law_spectrum() {
        let p = 125;
        let vals: Vec<f64> = (1..=p).map(|j| 30.0 * (j as f64).powf(-1.3)).collect();
        let g = random_psd_with_spectrum(p, &vals, &mut seeded(8));
        let s = srft_new(p, 25, 10, 4).unwrap();
        let f = randomized_svd_dense(&g, &s, 25).unwrap();
        for j in 0..10 {
            let rel = (f.sigma[j] - vals[j]).abs() / vals[j];
            assert!(rel <= 0.05, "j={j} rel={rel}");
        }
        assert_eq!(f.sigma.len(), 25);
    }

    #[test]
    fn dense_rejects_asymmetric() {
        let s = srft_new(3, 1, 1, 0).unwrap();
        let mut g = DenseMatrix::identity(3);
        g[(0, 1)] = 1.0;
        assert!(matches!(randomized_svd_dense(&g, &s, 1), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn sketched_single_step() {
        let p = 10;
        let s = srft_new(p, 3, 2, 6).unwrap();
        let mut g = vec![0.0; p];
        g[0] = 1.0;
        let gs = s.apply(&g).unwrap();
        let mut acc = SketchAccumulator::new(p, s.ell());
        acc.accumulate(&g, &gs).unwrap();
        let qr = crate::linalg::qr_rank1_update(&QrFactors::zero(p, s.ell()).unwrap(), &g, &gs).unwrap();
        let f = randomized_svd_sketched(&acc, &qr, 3).unwrap();
        assert!((f.sigma[0] - norm(&gs)).abs() <= 1e-12 * norm(&gs));
        assert!(f.sigma[1].abs() <= 1e-12 && f.sigma[2].abs() <= 1e-12);
        assert!((f.v[(0, 0)].abs() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sketched_full_sketch_matches_eigenvalues() {
        // ℓ = p: the sketch is orthogonal, so G̃'s singular values are G's
        // eigenvalues.
        let p = 8;
        let s = srft_new(p, 5, 3, 2).unwrap();
        let mut rng = seeded(12);
        let mut acc = SketchAccumulator::new(p, p);
        let mut qr = QrFactors::zero(p, p).unwrap();
        let mut dense = DenseMatrix::zeros(p, p);
        let basis = crate::linalg::random::random_orthonormal(p, 3, &mut rng);
        for t in 0..12 {
            let coeff = crate::linalg::random::gaussian_vec(3, &mut rng);
            let g = basis.matvec(&coeff);
            let gs = s.apply(&g).unwrap();
            acc.accumulate(&g, &gs).unwrap();
            qr = crate::linalg::qr_rank1_update(&qr, &g, &gs).unwrap();
            dense.rank1_update(1.0, &g, &g);
            let _ = t;
        }
        let f = randomized_svd_sketched(&acc, &qr, 5).unwrap();
        let exact = sym_eig(&dense).unwrap().eigenvalues;
        for j in 0..3 {
            assert!((f.sigma[j] - exact[j]).abs() <= 1e-6 * exact[0]);
        }
        assert!(f.v.orthonormality_error() <= 1e-6);
        let err = f.reconstruct().sub(&dense).frobenius_norm();
        assert!(err <= 1e-6 * dense.frobenius_norm());
        check_qr_current(&acc, &qr).unwrap();
    }

    #[test]
    fn sketched_zero_accumulator() {
        let acc = SketchAccumulator::new(6, 3);
        let qr = QrFactors::zero(6, 3).unwrap();
        let f = randomized_svd_sketched(&acc, &qr, 2).unwrap();
        assert_eq!(f.sigma, vec![0.0, 0.0]);
        assert_eq!(f.active_rank(), 0);
    }

    #[test]
    fn stale_factors_detected() {
        let mut acc = SketchAccumulator::new(4, 2);
        let qr = QrFactors::zero(4, 2).unwrap();
        acc.accumulate(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0]).unwrap();
        assert!(check_qr_current(&acc, &qr).is_err());
    }

    #[test]
    fn error_radius() {
        assert!((approx_error_radius(125, 25, 1.0) - 6.0).abs() < 1e-12);
        assert_eq!(approx_error_radius(40, 7, 0.0), 0.0);
        assert!((approx_error_radius(9, 9, 2.0) - 2.0 * 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn range_error_cases() {
        let g = random_psd_with_spectrum(7, &[3.0, 1.0], &mut seeded(1));
        let eig = sym_eig(&g).unwrap();
        let q = eig.eigenvectors.leading_cols(2);
        assert!(range_error(&g, &q) <= 1e-8);
        let empty = DenseMatrix::zeros(7, 0);
        assert!((range_error(&g, &empty) - 3.0).abs() <= 1e-9);
        let _ = dot(&[1.0], &[1.0]);
    }
}
