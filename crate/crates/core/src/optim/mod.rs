//! SGD, diagonal and full-matrix AdaGrad, and the randomized low-rank
//! variants behind one step interface.

pub mod vr;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, qr_rank1_update, sym_eig, DenseMatrix, QrFactors, SymmetricEig};
use crate::lowrank::{
    check_qr_current, randomized_svd_dense, randomized_svd_sketched, svd_in_basis, LowRankFactors,
    SketchAccumulator, PINV_REL_TOL,
};
use crate::sketch::{SrftSketch, DEFAULT_OVERSAMPLE};

pub use vr::{rada_vr_run, vr_gradient, vr_pivot, VrRun};

pub const DEFAULT_DELTA: f64 = 1e-4;

/// Components of `g` this far (relative) outside the active subspace make a
/// `delta = 0` step singular.
const NULL_COMPONENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Sgd,
    AdagradDiag,
    AdaFull,
    AdaLr,
    Radagrad,
    RadaVr,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Sgd,
        Variant::AdagradDiag,
        Variant::AdaFull,
        Variant::AdaLr,
        Variant::Radagrad,
        Variant::RadaVr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sgd => "sgd",
            Variant::AdagradDiag => "adagrad_diag",
            Variant::AdaFull => "ada_full",
            Variant::AdaLr => "ada_lr",
            Variant::Radagrad => "radagrad",
            Variant::RadaVr => "rada_vr",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Variant::AdaLr | Variant::Radagrad | Variant::RadaVr)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config("optimizer", format!("unknown variant {s:?}")))
    }
}

/// How ADA-LR finds the basis it projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeFinder {
    /// QR of the SRFT sketch `G Π^T`.
    Srft,
    /// Top eigenvectors of `G` (test oracle).
    ExactEigen,
}

/// Whether the pivot gradient `μ` is the mean or the sum of per-sample
/// gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotScale {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub eta: f64,
    pub delta: f64,
    pub tau: usize,
    pub oversample: usize,
    pub seed: u64,
    /// Inner steps per pivot refresh; `None` means `5n`.
    pub vr_update_freq: Option<usize>,
    /// Epochs of diagonal AdaGrad run before the first pivot.
    pub warm_start_epochs: usize,
    /// Step size for the warm start; `None` reuses `eta`.
    pub warm_start_eta: Option<f64>,
    pub pivot_scale: PivotScale,
    pub range_finder: RangeFinder,
    /// Verify the QR factors against the accumulator after every update.
    pub check_qr: bool,
}

impl OptimizerConfig {
    pub fn new(variant: Variant, eta: f64) -> Self {
        OptimizerConfig {
            variant,
            eta,
            delta: DEFAULT_DELTA,
            tau: 25,
            oversample: DEFAULT_OVERSAMPLE,
            seed: 0,
            vr_update_freq: None,
            warm_start_epochs: 1,
            warm_start_eta: None,
            pivot_scale: PivotScale::Mean,
            range_finder: RangeFinder::Srft,
            check_qr: false,
        }
    }

    pub fn ell(&self) -> usize {
        self.tau + self.oversample
    }

    /// Checks ranges, and for randomized variants that the sketch fits in
    /// dimension `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", format!("must be positive, got {}", self.eta)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config("delta", format!("must be nonnegative, got {}", self.delta)));
        }
        if p == 0 {
            return Err(Error::config("p", "must be at least 1"));
        }
        if self.variant.is_randomized() {
            if self.tau == 0 {
                return Err(Error::config("tau", "must be at least 1"));
            }
            if self.ell() > p {
                return Err(Error::config(
                    "tau",
                    format!("tau + oversample = {} exceeds the dimension {p}", self.ell()),
                ));
            }
        }
        if self.vr_update_freq == Some(0) {
            return Err(Error::config("vr_update_freq", "must be at least 1"));
        }
        if let Some(w) = self.warm_start_eta {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::config("warm_start_eta", format!("must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    None,
    Diag {
        acc: Vec<f64>,
    },
    Full {
        g: DenseMatrix,
    },
    /// ADA-LR: the dense accumulator and the sketch used to find its range.
    Dense {
        g: DenseMatrix,
        sketch: SrftSketch,
        factors: Option<LowRankFactors>,
    },
    /// RADAGRAD / RADA-VR: only the sketched accumulator and its QR factors.
    Sketched {
        acc: SketchAccumulator,
        qr: QrFactors,
        sketch: SrftSketch,
        factors: Option<LowRankFactors>,
        tau: usize,
    },
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub beta: Vec<f64>,
    pub step: usize,
    config: OptimizerConfig,
    payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    /// `||γ_t|| = η ||g - V V^T g||` for the corrected low-rank update, 0 otherwise.
    pub correction_norm: f64,
}

impl OptimizerState {
    pub fn init(config: &OptimizerConfig, beta0: Vec<f64>) -> Result<Self> {
        let p = beta0.len();
        config.validate(p)?;
        if beta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial parameters".into()));
        }
        let payload = match config.variant {
            Variant::Sgd => Payload::None,
            Variant::AdagradDiag => Payload::Diag { acc: vec![0.0; p] },
            Variant::AdaFull => Payload::Full { g: DenseMatrix::zeros(p, p) },
            Variant::AdaLr => Payload::Dense {
                g: DenseMatrix::zeros(p, p),
                sketch: SrftSketch::new(p, config.tau, config.oversample, config.seed)?,
                factors: None,
            },
            Variant::Radagrad | Variant::RadaVr => {
                let sketch = SrftSketch::new(p, config.tau, config.oversample, config.seed)?;
                let ell = sketch.ell();
                Payload::Sketched {
                    acc: SketchAccumulator::new(p, ell),
                    qr: QrFactors::zero(p, ell)?,
                    sketch,
                    factors: None,
                    tau: config.tau,
                }
            }
        };
        Ok(OptimizerState { beta: beta0, step: 0, config: config.clone(), payload })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Current low-rank factors, if the variant keeps them and a step has
    /// been taken.
    pub fn factors(&self) -> Option<&LowRankFactors> {
        match &self.payload {
            Payload::Dense { factors, .. } | Payload::Sketched { factors, .. } => factors.as_ref(),
            _ => None,
        }
    }

    /// Applies one update with gradient `g`.
    pub fn step(&mut self, g: &[f64]) -> Result<StepInfo> {
        if g.len() != self.beta.len() {
            return Err(Error::dim(
                "step",
                format!("gradient of length {} for {} parameters", g.len(), self.beta.len()),
            ));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient at step {}", self.step + 1)));
        }
        let eta = self.config.eta;
        let delta = self.config.delta;
        let mut info = StepInfo::default();
        match &mut self.payload {
            Payload::None => axpy(-eta, g, &mut self.beta),
            Payload::Diag { acc } => diag_step(&mut self.beta, acc, g, eta, delta),
            Payload::Full { g: gmat } => {
                gmat.rank1_update(1.0, g, g);
                let eig = sym_eig(gmat)?;
                let dir = full_direction(&eig, g, delta)?;
                axpy(-eta, &dir, &mut self.beta);
            }
            Payload::Dense { g: gmat, sketch, factors } => {
                gmat.rank1_update(1.0, g, g);
                let f = match self.config.range_finder {
                    RangeFinder::Srft => randomized_svd_dense(gmat, sketch, self.config.tau)?,
                    RangeFinder::ExactEigen => {
                        let eig = sym_eig(gmat)?;
                        let q = eig.eigenvectors.leading_cols(self.config.tau);
                        svd_in_basis(gmat, &q, self.config.tau)?
                    }
                };
                let lr = lowrank_direction(&f, g, delta)?;
                if delta == 0.0 && lr.active == 0 && norm(g) > 0.0 {
                    return Err(Error::Singular(format!(
                        "all singular values are zero at step {} with delta = 0",
                        self.step + 1
                    )));
                }
                axpy(-eta, &lr.precond, &mut self.beta);
                *factors = Some(f);
            }
            Payload::Sketched { acc, qr, sketch, factors, tau } => {
                let gs = sketch.apply(g)?;
                acc.accumulate(g, &gs)?;
                *qr = qr_rank1_update(qr, g, &gs)?;
                if self.config.check_qr {
                    check_qr_current(acc, qr)?;
                }
                let f = randomized_svd_sketched(acc, qr, *tau)?;
                let lr = lowrank_direction(&f, g, delta)?;
                if delta == 0.0 {
                    let gn = norm(g);
                    if let Some(c) = lr.inactive_coeffs.iter().find(|c| c.abs() > NULL_COMPONENT_TOL * gn) {
                        return Err(Error::Singular(format!(
                            "zero singular value on a direction with V^T g = {c:e} at step {} with delta = 0",
                            self.step + 1
                        )));
                    }
                }
                // β ← β − η V(Σ^{1/2}+δI)^{-1}V^T g − η (g − V V^T g)
                let residual: Vec<f64> = g.iter().zip(&lr.proj).map(|(a, b)| a - b).collect();
                axpy(-eta, &lr.precond, &mut self.beta);
                axpy(-eta, &residual, &mut self.beta);
                info.correction_norm = eta * norm(&residual);
                *factors = Some(f);
            }
        }
        if self.beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameters after step {}", self.step + 1)));
        }
        self.step += 1;
        Ok(info)
    }

    /// Singular values of the proximal term without `δ`: `√acc` (diag),
    /// eigenvalues of `G^{1/2}` (full), `√σ` (low-rank), descending.
    pub fn proximal_eigenvalues(&self) -> Result<Vec<f64>> {
        let mut vals = match &self.payload {
            Payload::None => return Err(Error::UnsupportedVariant(self.variant().name().into())),
            Payload::Diag { acc } => acc.iter().map(|a| a.sqrt()).collect(),
            Payload::Full { g } => sym_eig(g)?.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect(),
            Payload::Dense { factors, .. } | Payload::Sketched { factors, .. } => match factors {
                Some(f) => f.sigma.iter().map(|s| s.max(0.0).sqrt()).collect(),
                None => vec![0.0; self.config.tau],
            },
        };
        vals.sort_by(|a: &f64, b: &f64| b.total_cmp(a));
        Ok(vals)
    }

    #[cfg(test)]
    pub(crate) fn set_sketched_rank(&mut self, rank: usize) {
        if let Payload::Sketched { tau, .. } = &mut self.payload {
            *tau = rank;
        }
    }
}

/// `acc_j += g_j²; β_j −= η g_j / (δ + √acc_j)`, with `0/0 = 0`.
fn diag_step(beta: &mut [f64], acc: &mut [f64], g: &[f64], eta: f64, delta: f64) {
    for ((b, a), &gj) in beta.iter_mut().zip(acc.iter_mut()).zip(g) {
        *a += gj * gj;
        let denom = delta + a.sqrt();
        if gj != 0.0 && denom > 0.0 {
            *b -= eta * gj / denom;
        }
    }
}

/// `(δI + G^{1/2})^{-1} g`, a pseudo-inverse over the numerical range of `G`
/// when `δ = 0`.
fn full_direction(eig: &SymmetricEig, g: &[f64], delta: f64) -> Result<Vec<f64>> {
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = PINV_REL_TOL * top;
    let mut coeffs = eig.eigenvectors.t_matvec(g);
    let mut null2 = 0.0;
    for (c, &l) in coeffs.iter_mut().zip(&eig.eigenvalues) {
        let l = l.max(0.0);
        if delta == 0.0 && (l <= cutoff || l == 0.0) {
            null2 += *c * *c;
            *c = 0.0;
        } else {
            *c /= l.sqrt() + delta;
        }
    }
    if null2.sqrt() > NULL_COMPONENT_TOL * norm(g) {
        return Err(Error::Singular(format!(
            "gradient has a component of norm {:e} in the null space of G with delta = 0",
            null2.sqrt()
        )));
    }
    Ok(eig.eigenvectors.matvec(&coeffs))
}

struct LowRankDirection {
    /// `V_a (Σ_a^{1/2} + δI)^{-1} V_a^T g` over the active columns.
    precond: Vec<f64>,
    /// `V_a V_a^T g`.
    proj: Vec<f64>,
    active: usize,
    /// `V_j^T g` for the inactive columns.
    inactive_coeffs: Vec<f64>,
}

/// Applies the low-rank proximal term with three thin products. Columns with
/// `σ_j ≤ 1e-10 σ_1` are treated as outside the factorization.
fn lowrank_direction(f: &LowRankFactors, g: &[f64], delta: f64) -> Result<LowRankDirection> {
    let active = f.active_rank();
    let coeffs = f.v.t_matvec(g);
    let p = g.len();
    let mut precond = vec![0.0; p];
    let mut proj = vec![0.0; p];
    let mut scaled = vec![0.0; coeffs.len()];
    for j in 0..active {
        scaled[j] = coeffs[j] / (f.sigma[j].sqrt() + delta);
    }
    for i in 0..p {
        let row = &f.v.row(i)[..active];
        precond[i] = dot(row, &scaled[..active]);
        proj[i] = dot(row, &coeffs[..active]);
    }
    Ok(LowRankDirection {
        precond,
        proj,
        active,
        inactive_coeffs: coeffs[active..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{gaussian_vec, random_orthonormal};
    use crate::rng::seeded;

    fn cfg(variant: Variant, eta: f64, delta: f64) -> OptimizerConfig {
        OptimizerConfig { delta, ..OptimizerConfig::new(variant, eta) }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("adam".parse::<Variant>().is_err());
    }

    #[test]
    fn init_states() {
        let s = OptimizerState::init(&cfg(Variant::Sgd, 0.1, 0.0), vec![0.0; 3]).unwrap();
        assert_eq!((s.beta.clone(), s.step), (vec![0.0; 3], 0));
        let s = OptimizerState::init(&cfg(Variant::Radagrad, 0.1, 1e-4), vec![0.0; 125]).unwrap();
        match s.payload() {
            Payload::Sketched { sketch, acc, .. } => {
                assert_eq!(sketch.ell(), 35);
                assert_eq!(acc.g_sketch().cols(), 35);
            }
            other => panic!("{other:?}"),
        }
        let t = OptimizerState::init(&cfg(Variant::Radagrad, 0.1, 1e-4), vec![0.0; 125]).unwrap();
        match (s.payload(), t.payload()) {
            (Payload::Sketched { sketch: a, .. }, Payload::Sketched { sketch: b, .. }) => assert_eq!(a, b),
            _ => unreachable!(),
        }
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            cfg(Variant::Sgd, 0.0, 0.0),
            cfg(Variant::Sgd, 0.1, -1.0),
            OptimizerConfig { tau: 0, ..cfg(Variant::AdaLr, 0.1, 0.0) },
            OptimizerConfig { tau: 30, ..cfg(Variant::Radagrad, 0.1, 0.0) },
            OptimizerConfig { vr_update_freq: Some(0), ..cfg(Variant::RadaVr, 0.1, 0.0) },
        ];
        for c in bad {
            assert!(matches!(OptimizerState::init(&c, vec![0.0; 20]), Err(Error::Config { .. })), "{c:?}");
        }
    }

    #[test]
    fn sgd_steps() {
        let mut s = OptimizerState::init(&cfg(Variant::Sgd, 0.5, 0.0), vec![1.0, 1.0]).unwrap();
        s.step(&[2.0, 0.0]).unwrap();
        assert_eq!(s.beta, vec![0.0, 1.0]);
        s.step(&[0.0, 0.0]).unwrap();
        assert_eq!(s.beta, vec![0.0, 1.0]);
        s.step(&[0.3, -0.7]).unwrap();
        s.step(&[-0.3, 0.7]).unwrap();
        assert!(close(&s.beta, &[0.0, 1.0], 1e-15));
        assert!(s.step(&[1.0]).is_err());
    }

    #[test]
    fn diag_first_step_is_sign() {
        let mut s = OptimizerState::init(&cfg(Variant::AdagradDiag, 0.3, 0.0), vec![0.0; 4]).unwrap();
        s.step(&[2.5, -0.01, 0.0, 7.0]).unwrap();
        assert_eq!(s.beta, vec![-0.3, 0.3, 0.0, -0.3]);
        s.step(&[0.0; 4]).unwrap();
        assert_eq!(s.beta, vec![-0.3, 0.3, 0.0, -0.3]);
    }

    #[test]
    fn diag_constant_gradient_decay() {
        let mut s = OptimizerState::init(&cfg(Variant::AdagradDiag, 1.0, 0.0), vec![0.0]).unwrap();
        let mut prev = 0.0;
        for t in 1..=50 {
            s.step(&[3.0]).unwrap();
            let moved = prev - s.beta[0];
            assert!((moved - 1.0 / (t as f64).sqrt()).abs() < 1e-12);
            prev = s.beta[0];
        }
    }

    #[test]
    fn full_one_dimensional_matches_diag() {
        let mut a = OptimizerState::init(&cfg(Variant::AdaFull, 0.7, 0.0), vec![0.5]).unwrap();
        let mut b = OptimizerState::init(&cfg(Variant::AdagradDiag, 0.7, 0.0), vec![0.5]).unwrap();
        for g in [1.0, -2.0, 0.5, 3.0, -0.1] {
            a.step(&[g]).unwrap();
            b.step(&[g]).unwrap();
            assert!((a.beta[0] - b.beta[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn full_first_step_normalized() {
        let mut s = OptimizerState::init(&cfg(Variant::AdaFull, 0.5, 0.0), vec![0.0; 3]).unwrap();
        s.step(&[3.0, 0.0, 4.0]).unwrap();
        assert!(close(&s.beta, &[-0.3, 0.0, -0.4], 1e-12));
    }

    #[test]
    fn full_matches_diag_on_axis_aligned_stream() {
        let mut rng = seeded(4);
        for delta in [0.0, 1e-4, 0.5] {
            let mut a = OptimizerState::init(&cfg(Variant::AdaFull, 0.2, delta), vec![0.1; 6]).unwrap();
            let mut b = OptimizerState::init(&cfg(Variant::AdagradDiag, 0.2, delta), vec![0.1; 6]).unwrap();
            for t in 0..40 {
                let mut g = vec![0.0; 6];
                let j = t % 4;
                g[j] = gaussian_vec(1, &mut rng)[0] * 3.0;
                a.step(&g).unwrap();
                b.step(&g).unwrap();
                assert!(close(&a.beta, &b.beta, 1e-10), "delta {delta} step {t}");
            }
        }
    }

    #[test]
    fn full_rejects_null_direction_with_zero_delta() {
        // g outside range(G) can only arise through round-off, so check the
        // guard directly.
        let eig = sym_eig(&DenseMatrix::from_diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(full_direction(&eig, &[0.0, 1.0], 0.0), Err(Error::Singular(_))));
        assert!(full_direction(&eig, &[0.0, 1.0], 0.1).is_ok());
    }

    #[test]
    fn ada_lr_exact_basis_matches_full() {
        let p = 12;
        let tau = 4;
        let mut rng = seeded(9);
        let basis = random_orthonormal(p, 3, &mut rng);
        for delta in [0.0, 1e-3] {
            let lr_cfg = OptimizerConfig {
                tau,
                oversample: 2,
                range_finder: RangeFinder::ExactEigen,
                ..cfg(Variant::AdaLr, 0.1, delta)
            };
            let mut a = OptimizerState::init(&lr_cfg, vec![0.0; p]).unwrap();
            let mut b = OptimizerState::init(&cfg(Variant::AdaFull, 0.1, delta), vec![0.0; p]).unwrap();
            for _ in 0..30 {
                let g = basis.matvec(&gaussian_vec(3, &mut rng));
                let before = a.beta.clone();
                a.step(&g).unwrap();
                b.step(&g).unwrap();
                let da: Vec<f64> = a.beta.iter().zip(&before).map(|(x, y)| x - y).collect();
                let db: Vec<f64> = b.beta.iter().zip(&before).map(|(x, y)| x - y).collect();
                assert!(close(&da, &db, 1e-6));
                b.beta = a.beta.clone();
            }
        }
    }

    #[test]
    fn ada_lr_srft_recovers_low_rank_stream() {
        // rank(G) ≤ τ ≤ ℓ, so the sketch captures the range and the step
        // coincides with the full-matrix step.
        let p = 20;
        let mut rng = seeded(2);
        let basis = random_orthonormal(p, 2, &mut rng);
        let lr_cfg = OptimizerConfig { tau: 3, oversample: 3, ..cfg(Variant::AdaLr, 0.1, 1e-3) };
        let mut a = OptimizerState::init(&lr_cfg, vec![0.0; p]).unwrap();
        let mut b = OptimizerState::init(&cfg(Variant::AdaFull, 0.1, 1e-3), vec![0.0; p]).unwrap();
        for _ in 0..15 {
            let g = basis.matvec(&gaussian_vec(2, &mut rng));
            a.step(&g).unwrap();
            b.step(&g).unwrap();
            assert!(close(&a.beta, &b.beta, 1e-6));
        }
    }

    #[test]
    fn ada_lr_ignores_directions_outside_factors() {
        let f = LowRankFactors {
            v: DenseMatrix::from_cols(3, &[vec![1.0, 0.0, 0.0]]),
            sigma: vec![4.0],
        };
        let d = lowrank_direction(&f, &[0.0, 2.0, -1.0], 0.5).unwrap();
        assert_eq!(d.precond, vec![0.0; 3]);
    }

    #[test]
    fn isotropic_spectrum_scales_projection() {
        let v = random_orthonormal(6, 3, &mut seeded(1));
        let c = 9.0;
        let f = LowRankFactors { v: v.clone(), sigma: vec![c; 3] };
        let g = gaussian_vec(6, &mut seeded(5));
        let d = lowrank_direction(&f, &g, 0.0).unwrap();
        let expect = v.matvec(&v.t_matvec(&g));
        assert!(close(&d.precond, &expect.iter().map(|x| x / c.sqrt()).collect::<Vec<_>>(), 1e-12));
    }

    #[test]
    fn ada_lr_zero_gradient_with_zero_delta_is_not_singular() {
        let c = OptimizerConfig { tau: 2, oversample: 1, ..cfg(Variant::AdaLr, 0.1, 0.0) };
        let mut s = OptimizerState::init(&c, vec![0.0; 5]).unwrap();
        s.step(&[0.0; 5]).unwrap();
        assert_eq!(s.beta, vec![0.0; 5]);
    }

    #[test]
    fn radagrad_correction_vanishes_on_low_rank_stream() {
        let p = 30;
        let tau = 5;
        let mut rng = seeded(6);
        let basis = random_orthonormal(p, tau, &mut rng);
        let c = OptimizerConfig { tau, ..cfg(Variant::Radagrad, 1.0, 1e-4) };
        let mut s = OptimizerState::init(&c, vec![0.0; p]).unwrap();
        for _ in 0..40 {
            let g = basis.matvec(&gaussian_vec(tau, &mut rng));
            let info = s.step(&g).unwrap();
            assert!(info.correction_norm <= 1e-6 * norm(&g), "{}", info.correction_norm);
        }
    }

    #[test]
    fn radagrad_correction_nonzero_on_full_rank_stream() {
        let p = 30;
        let mut rng = seeded(6);
        let c = OptimizerConfig { tau: 3, oversample: 2, ..cfg(Variant::Radagrad, 1.0, 1e-4) };
        let mut s = OptimizerState::init(&c, vec![0.0; p]).unwrap();
        let mut last = 0.0;
        for _ in 0..20 {
            last = s.step(&gaussian_vec(p, &mut rng)).unwrap().correction_norm;
        }
        assert!(last > 0.1);
    }

    #[test]
    fn radagrad_empty_factors_is_sgd() {
        let c = OptimizerConfig { tau: 1, oversample: 1, ..cfg(Variant::Radagrad, 0.25, 1e-4) };
        let mut s = OptimizerState::init(&c, vec![1.0; 4]).unwrap();
        s.set_sketched_rank(0);
        let mut sgd = OptimizerState::init(&cfg(Variant::Sgd, 0.25, 0.0), vec![1.0; 4]).unwrap();
        let mut rng = seeded(3);
        for _ in 0..5 {
            let g = gaussian_vec(4, &mut rng);
            s.step(&g).unwrap();
            sgd.step(&g).unwrap();
            assert_eq!(s.beta, sgd.beta);
        }
    }

    #[test]
    fn radagrad_full_sketch_matches_full_on_axis_stream() {
        // ℓ = p makes the sketch orthogonal; gradients hit exactly τ
        // coordinates.
        let p = 8;
        let tau = 5;
        let c = OptimizerConfig { tau, oversample: 3, check_qr: true, ..cfg(Variant::Radagrad, 0.1, 1e-3) };
        let mut a = OptimizerState::init(&c, vec![0.0; p]).unwrap();
        let mut b = OptimizerState::init(&cfg(Variant::AdaFull, 0.1, 1e-3), vec![0.0; p]).unwrap();
        let mut rng = seeded(8);
        for t in 0..40 {
            let mut g = vec![0.0; p];
            g[[0, 2, 3, 5, 7][t % tau]] = 1.0 + gaussian_vec(1, &mut rng)[0].abs();
            a.step(&g).unwrap();
            b.step(&g).unwrap();
            assert!(close(&a.beta, &b.beta, 1e-5), "step {t}");
        }
    }

    #[test]
    fn deterministic_trajectories() {
        for v in Variant::ALL {
            let c = OptimizerConfig { tau: 3, oversample: 2, ..cfg(v, 0.05, 1e-4) };
            let run = || {
                let mut s = OptimizerState::init(&c, vec![0.0; 10]).unwrap();
                let mut rng = seeded(77);
                for _ in 0..15 {
                    s.step(&gaussian_vec(10, &mut rng)).unwrap();
                }
                s.beta
            };
            let (a, b) = (run(), run());
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{v}");
        }
    }

    #[test]
    fn one_dimensional_scale_invariance() {
        for v in [Variant::AdagradDiag, Variant::AdaFull] {
            for c in [1e-3, 1.0, 250.0] {
                let mut s = OptimizerState::init(&cfg(v, 0.4, 0.0), vec![0.0]).unwrap();
                s.step(&[-2.0 * c]).unwrap();
                assert!((s.beta[0] - 0.4).abs() < 1e-14, "{v} {c}");
            }
        }
    }

    #[test]
    fn diag_accumulator_nondecreasing() {
        let mut s = OptimizerState::init(&cfg(Variant::AdagradDiag, 0.1, 1e-4), vec![0.0; 5]).unwrap();
        let mut rng = seeded(1);
        let mut prev = vec![0.0; 5];
        for _ in 0..20 {
            s.step(&gaussian_vec(5, &mut rng)).unwrap();
            if let Payload::Diag { acc } = s.payload() {
                assert!(acc.iter().zip(&prev).all(|(a, b)| a >= b));
                prev = acc.clone();
            }
        }
    }

    #[test]
    fn proximal_eigenvalues_by_variant() {
        let mut d = OptimizerState::init(&cfg(Variant::AdagradDiag, 0.1, 0.0), vec![0.0; 3]).unwrap();
        d.step(&[4.0, 0.0, 2.0]).unwrap();
        assert_eq!(d.proximal_eigenvalues().unwrap(), vec![4.0, 2.0, 0.0]);
        let s = OptimizerState::init(&cfg(Variant::Sgd, 0.1, 0.0), vec![0.0; 3]).unwrap();
        assert!(matches!(s.proximal_eigenvalues(), Err(Error::UnsupportedVariant(_))));
        let mut f = OptimizerState::init(&cfg(Variant::AdaFull, 0.1, 0.0), vec![0.0; 3]).unwrap();
        f.step(&[3.0, 4.0, 0.0]).unwrap();
        let e = f.proximal_eigenvalues().unwrap();
        assert!((e[0] - 5.0).abs() < 1e-12 && e[1].abs() < 1e-7);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut s = OptimizerState::init(&cfg(Variant::Sgd, 0.1, 0.0), vec![0.0; 2]).unwrap();
        assert!(matches!(s.step(&[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
        assert_eq!(s.step, 0);
    }
}
