//! Proximal spectra, regret-bound terms, per-step timing, and numerical checks
//! of the trace identities and range-finder error bound behind the low-rank
//! analysis.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::random::{gaussian_matrix, gaussian_vec, random_psd_with_spectrum};
use crate::linalg::{sym_eig, sym_eigvals, DenseMatrix};
use crate::lowrank::{approx_error_radius, min_projection_dim, randomized_svd_dense, range_error, sketched_range, PINV_REL_TOL};
use crate::optim::{OptimizerConfig, OptimizerState, Variant};
use crate::rng::{substream, Purpose};
use crate::sketch::SrftSketch;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub label: String,
    /// Leading proximal singular values divided by their sum, descending.
    pub values: Vec<f64>,
    pub step: usize,
}

/// Keeps the `top_k` largest of `values` and divides them by their sum. An
/// all-zero input stays all zero.
pub fn normalize_top(values: &[f64], top_k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().map(|x| x.max(0.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.truncate(top_k);
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// Normalized top-`top_k` eigenvalues of the proximal term `G^{1/2}` (or its
/// diagonal / low-rank stand-in) held by `state`.
pub fn proximal_spectrum(state: &OptimizerState, top_k: usize) -> Result<SpectrumReport> {
    let vals = state.proximal_eigenvalues()?;
    Ok(SpectrumReport {
        label: state.variant().name().to_string(),
        values: normalize_top(&vals, top_k),
        step: state.step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretTerms {
    /// `tr(G_T^{1/2})`.
    pub trace_sqrt_g: f64,
    /// `Σ_j ||g_{1:T,j}||`.
    pub sum_col_norms: f64,
    /// `sqrt(1 + 7p/τ) σ_{k+1}(G_T)`.
    pub epsilon: f64,
    pub t: usize,
}

/// Proximal terms of the full-matrix and diagonal regret bounds for the
/// gradients in the rows of `log`.
pub fn regret_terms(log: &DenseMatrix, tau: usize, k: usize) -> Result<RegretTerms> {
    let (t, p) = (log.rows(), log.cols());
    if t == 0 {
        return Err(Error::EmptyDataset);
    }
    if tau == 0 || tau > p {
        return Err(Error::config("tau", format!("must be in 1..={p}, got {tau}")));
    }
    let g = log.t_matmul(log);
    let eig = sym_eigvals(&crate::linalg::random::symmetrize(&g))?;
    let top = eig[0].max(0.0);
    let trace_sqrt_g = eig
        .iter()
        .filter(|&&l| l > PINV_REL_TOL * top)
        .map(|l| l.sqrt())
        .sum();
    let sum_col_norms = (0..p)
        .map(|j| (0..t).map(|i| log[(i, j)] * log[(i, j)]).sum::<f64>().sqrt())
        .sum();
    let sigma_k1 = eig.get(k).copied().unwrap_or(0.0).max(0.0);
    Ok(RegretTerms {
        trace_sqrt_g,
        sum_col_norms,
        epsilon: approx_error_radius(p, tau, sigma_k1),
        t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingProfile {
    pub variant: Variant,
    /// `(p, τ, median seconds per step)`.
    pub points: Vec<(usize, usize, f64)>,
    /// Least-squares slope of `log(time)` against `log(p)`.
    pub exponent: f64,
}

pub const TIMING_WARMUP: usize = 3;

/// Median wall time of `reps` steps for each `p`, after three discarded
/// warm-up steps, on a fixed Gaussian gradient stream.
pub fn timing_profile(
    variant: Variant,
    p_list: &[usize],
    tau: usize,
    reps: usize,
    seed: u64,
) -> Result<TimingProfile> {
    if reps < 5 {
        return Err(Error::config("reps", format!("must be at least 5, got {reps}")));
    }
    if p_list.len() < 2 {
        return Err(Error::config("p_list", "need at least two sizes to fit an exponent"));
    }
    let mut points = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let cfg = OptimizerConfig { tau, seed, ..OptimizerConfig::new(variant, 1e-3) };
        let mut state = OptimizerState::init(&cfg, vec![0.0; p])?;
        let mut rng = substream(seed, p as u64, Purpose::Check);
        let grads: Vec<Vec<f64>> = (0..TIMING_WARMUP + reps).map(|_| gaussian_vec(p, &mut rng)).collect();
        for g in &grads[..TIMING_WARMUP] {
            state.step(g)?;
        }
        let mut times = Vec::with_capacity(reps);
        for g in &grads[TIMING_WARMUP..] {
            let start = Instant::now();
            state.step(g)?;
            times.push(start.elapsed().as_secs_f64());
        }
        points.push((p, tau, median(&mut times)));
    }
    let xs: Vec<f64> = points.iter().map(|&(p, _, _)| (p as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, _, t)| t.max(1e-12).ln()).collect();
    Ok(TimingProfile { variant, points, exponent: ols_slope(&xs, &ys) })
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sum of `√λ` over eigenvalues above `1e-12 λ_max`; the relative floor
/// removes the round-off eigenvalues of rank-deficient inputs.
fn trace_sqrt_floor(a: &DenseMatrix) -> Result<f64> {
    let vals = sym_eigvals(a)?;
    let top = vals[0].max(0.0);
    Ok(vals.iter().filter(|&&l| l > 1e-12 * top).map(|l| l.sqrt()).sum())
}

/// `(tr((Q^T G Q)^{1/2}), tr((Q Q^T G)^{1/2}))` for a random PSD `G` (p×p)
/// and the SRFT range basis `Q` (p×ℓ). The second trace goes through the
/// spectrum of `P G P`, `P = Q Q^T`, which shares its nonzero eigenvalues with
/// `Q Q^T G`.
pub fn trace_identity_sides(p: usize, ell: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = substream(seed, 0, Purpose::Check);
    let a = gaussian_matrix(p, p, &mut rng);
    let g = crate::linalg::random::symmetrize(&a.matmul_t(&a).scaled(1.0 / p as f64));
    let sketch = SrftSketch::new(p, ell, 0, seed)?;
    let q = sketched_range(&g, &sketch)?;
    let small = crate::linalg::random::symmetrize(&q.t_matmul(&g.matmul(&q)));
    let lhs = trace_sqrt_floor(&small)?;
    let proj = q.matmul_t(&q);
    let pgp = crate::linalg::random::symmetrize(&proj.matmul(&g).matmul(&proj));
    let rhs = trace_sqrt_floor(&pgp)?;
    Ok((lhs, rhs))
}

/// Both sides of `Σ_t <g_t, G̃_t^{-1/2} g_t> ≤ 2 tr(G̃_T^{1/2})` on a stream of
/// `t_steps` gradients in dimension `p` with power-law second moments, where
/// `G̃_t = V diag(σ) V^T` are the rank-`tau` randomized-SVD factors of the
/// exact accumulator and the inverse root is the thresholded pseudo-inverse.
pub fn proximal_sum_sides(p: usize, tau: usize, t_steps: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = substream(seed, 1, Purpose::Check);
    let spectrum: Vec<f64> = (1..=p).map(|j| 30.0 * (j as f64).powf(-1.3)).collect();
    let cov = random_psd_with_spectrum(p, &spectrum, &mut rng);
    let root = crate::linalg::psd_eig(&cov)?;
    let oversample = (p - tau).min(crate::sketch::DEFAULT_OVERSAMPLE);
    let sketch = SrftSketch::new(p, tau, oversample, seed)?;
    let mut g_acc = DenseMatrix::zeros(p, p);
    let mut lhs = 0.0;
    let mut last = None;
    for _ in 0..t_steps {
        let z = gaussian_vec(p, &mut rng);
        let g = root.apply_fn(&z, |l| l.max(0.0).sqrt());
        g_acc.rank1_update(1.0, &g, &g);
        let f = randomized_svd_dense(&g_acc, &sketch, tau)?;
        let coeffs = f.v.t_matvec(&g);
        lhs += (0..f.active_rank()).map(|j| coeffs[j] * coeffs[j] / f.sigma[j].sqrt()).sum::<f64>();
        last = Some(f);
    }
    let f = last.ok_or(Error::EmptyDataset)?;
    let rhs = 2.0 * f.sigma[..f.active_rank()].iter().map(|s| s.sqrt()).sum::<f64>();
    Ok((lhs, rhs))
}

/// Projection dimension for the range-finder bound, clamped to `p`.
pub fn range_bound_tau(p: usize, k: usize) -> usize {
    (min_projection_dim(k, p).ceil() as usize).min(p)
}

/// Absolute round-off allowance, relative to `||G||_2`, when the bound's
/// right-hand side is itself at round-off level (exactly low-rank `G`).
pub const RANGE_ROUNDOFF: f64 = 1e-10;

/// `(||G - Q Q^T G||_2, sqrt(1 + 7p/τ) σ_{k+1}, ||G||_2)` for a random rank-`k`
/// PSD `G` and the SRFT range basis with `ℓ = τ`.
pub fn range_bound_trial(p: usize, k: usize, tau: usize, seed: u64) -> Result<(f64, f64, f64)> {
    let mut rng = substream(seed, 2, Purpose::Check);
    let spectrum: Vec<f64> = (0..k).map(|_| gaussian_vec(1, &mut rng)[0].abs() + 0.1).collect();
    let g = random_psd_with_spectrum(p, &spectrum, &mut rng);
    let sketch = SrftSketch::new(p, tau, 0, seed)?;
    let q = sketched_range(&g, &sketch)?;
    let err = range_error(&g, &q);
    let eig = sym_eigvals(&g)?;
    let sigma_k1 = eig.get(k).copied().unwrap_or(0.0).max(0.0);
    Ok((err, approx_error_radius(p, tau, sigma_k1), eig[0]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Worst-case margin; nonnegative when the check holds.
    pub slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

pub const TRACE_IDENTITY_TOL: f64 = 1e-8;

/// Runs the three numerical checks with seeds derived from `seed`.
pub fn appendix_checks(seed: u64) -> CheckReport {
    let mut report = CheckReport::default();

    let mut worst = 0.0f64;
    let mut failure = None;
    for i in 0..20 {
        match trace_identity_sides(30, 10, seed.wrapping_add(i)) {
            Ok((a, b)) => worst = worst.max((a - b).abs()),
            Err(e) => failure = Some(e.to_string()),
        }
    }
    report.entries.push(CheckEntry {
        name: "trace_identity".into(),
        passed: failure.is_none() && worst <= TRACE_IDENTITY_TOL,
        slack: TRACE_IDENTITY_TOL - worst,
        detail: failure.unwrap_or_else(|| format!("max |lhs - rhs| = {worst:e} over 20 instances (p=30, l=10)")),
    });

    let mut min_slack = f64::INFINITY;
    let mut failure = None;
    for i in 0..20 {
        match proximal_sum_sides(20, 8, 50, seed.wrapping_add(i)) {
            Ok((lhs, rhs)) => min_slack = min_slack.min(rhs - lhs),
            Err(e) => failure = Some(e.to_string()),
        }
    }
    report.entries.push(CheckEntry {
        name: "proximal_sum_bound".into(),
        passed: failure.is_none() && min_slack >= -1e-8,
        slack: min_slack,
        detail: failure.unwrap_or_else(|| format!("min 2tr - sum = {min_slack:e} over 20 streams (T=50, p=20, tau=8)")),
    });

    let (p, k) = (128, 8);
    let tau = range_bound_tau(p, k);
    let mut ok = 0;
    let mut min_slack = f64::INFINITY;
    let mut failure = None;
    for i in 0..100 {
        match range_bound_trial(p, k, tau, seed.wrapping_add(i)) {
            Ok((err, eps, top)) => {
                let s = eps + RANGE_ROUNDOFF * top - err;
                min_slack = min_slack.min(s);
                ok += usize::from(s >= 0.0);
            }
            Err(e) => failure = Some(e.to_string()),
        }
    }
    report.entries.push(CheckEntry {
        name: "range_error_bound".into(),
        passed: failure.is_none() && ok >= 90,
        slack: min_slack,
        detail: failure.unwrap_or_else(|| format!("{ok}/100 within the radius (p={p}, k={k}, tau={tau})")),
    });
    report
}

/// Exact top-`top_k` normalized spectrum of `G^{1/2}` for an accumulator.
pub fn exact_sqrt_spectrum(g: &DenseMatrix, top_k: usize) -> Result<Vec<f64>> {
    let vals = sym_eig(g)?.eigenvalues;
    let roots: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(normalize_top(&roots, top_k))
}
