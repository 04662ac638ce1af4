//! Variance-reduced RADAGRAD: SVRG-style gradients around a periodically
//! refreshed pivot.

use rand::Rng as _;

use super::{OptimizerConfig, OptimizerState, PivotScale, Variant};
use crate::error::{Error, Result};
use crate::problems::FiniteSum;
use crate::rng::{substream, Purpose};

/// `∇f_B(β) − ∇f_B(β_0) + μ` for the batch `idx` (one index for the plain
/// stochastic case).
pub fn vr_gradient<P: FiniteSum + ?Sized>(
    problem: &P,
    beta: &[f64],
    pivot_beta: &[f64],
    mu: &[f64],
    idx: &[usize],
) -> Vec<f64> {
    let (_, g_now) = problem.batch_loss_grad(idx, beta);
    let (_, g_pivot) = problem.batch_loss_grad(idx, pivot_beta);
    // Difference first, so β = β_0 returns μ exactly.
    g_now
        .iter()
        .zip(&g_pivot)
        .zip(mu)
        .map(|((a, b), m)| (a - b) + m)
        .collect()
}

/// Full gradient at the pivot, mean or sum over samples.
pub fn vr_pivot<P: FiniteSum + ?Sized>(problem: &P, beta: &[f64], scale: PivotScale) -> Result<Vec<f64>> {
    let n = problem.n();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let all: Vec<usize> = (0..n).collect();
    let (_, mut mu) = problem.batch_loss_grad(&all, beta);
    if scale == PivotScale::Sum {
        for v in &mut mu {
            *v *= n as f64;
        }
    }
    Ok(mu)
}

#[derive(Debug, Clone)]
pub struct VrRun {
    pub beta: Vec<f64>,
    /// Mean loss over the problem after the warm start and after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Per-sample gradient evaluations used, warm start and pivots included.
    pub grad_evals: usize,
    pub state: OptimizerState,
}

/// Progress reported to the observer after every inner step.
#[derive(Debug)]
pub struct VrProgress<'a> {
    pub epoch: usize,
    pub inner_step: usize,
    pub beta: &'a [f64],
    pub grad_evals: usize,
}

/// Warm start with diagonal AdaGrad, then `epochs` outer iterations of: pivot
/// gradient, `m` inner RADAGRAD steps on variance-reduced gradients, pivot ←
/// last iterate. The RADAGRAD accumulators persist across epochs.
pub fn rada_vr_run<P: FiniteSum + ?Sized>(
    problem: &P,
    config: &OptimizerConfig,
    beta0: Vec<f64>,
    epochs: usize,
    batch_size: usize,
    mut observer: impl FnMut(&VrProgress<'_>),
) -> Result<VrRun> {
    if config.variant != Variant::RadaVr {
        return Err(Error::config("optimizer", format!("expected rada_vr, got {}", config.variant)));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    let n = problem.n();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let m = config.vr_update_freq.unwrap_or(5 * n);
    let mut rng = substream(config.seed, 0, Purpose::Shuffle);
    let mut grad_evals = 0usize;
    let mut beta = beta0;

    if config.warm_start_epochs > 0 {
        let warm_cfg = OptimizerConfig {
            variant: Variant::AdagradDiag,
            eta: config.warm_start_eta.unwrap_or(config.eta),
            ..config.clone()
        };
        let mut warm = OptimizerState::init(&warm_cfg, beta.clone())?;
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..config.warm_start_epochs {
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            for chunk in order.chunks(batch_size) {
                let (_, g) = problem.batch_loss_grad(chunk, &warm.beta);
                grad_evals += chunk.len();
                warm.step(&g)?;
            }
        }
        beta = warm.beta;
    }

    let mut state = OptimizerState::init(config, beta.clone())?;
    let mut epoch_losses = vec![problem.mean_loss(&state.beta)];
    let mut idx = vec![0usize; batch_size];
    for epoch in 0..epochs {
        let pivot = state.beta.clone();
        let mu = vr_pivot(problem, &pivot, config.pivot_scale)?;
        grad_evals += n;
        for inner in 0..m {
            for i in idx.iter_mut() {
                *i = rng.random_range(0..n);
            }
            let g = vr_gradient(problem, &state.beta, &pivot, &mu, &idx);
            grad_evals += 2 * batch_size;
            state.step(&g)?;
            observer(&VrProgress { epoch, inner_step: inner, beta: &state.beta, grad_evals });
        }
        let loss = problem.mean_loss(&state.beta);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss after epoch {}", epoch + 1)));
        }
        epoch_losses.push(loss);
    }
    Ok(VrRun { beta: state.beta.clone(), epoch_losses, grad_evals, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problems::{LinearLoss, LinearProblem};

    fn toy() -> LinearProblem {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -0.2]]);
        LinearProblem::new(x, vec![1.0, -2.0, 0.5], LinearLoss::LeastSquares)
    }

    #[test]
    fn gradient_at_pivot_is_mu() {
        let p = toy();
        let beta = [0.2, -0.4];
        let mu = vr_pivot(&p, &beta, PivotScale::Mean).unwrap();
        for i in 0..3 {
            let g = vr_gradient(&p, &beta, &beta, &mu, &[i]);
            assert_eq!(g, mu);
        }
    }

    #[test]
    fn two_sample_mean_by_hand() {
        // f_1: x=(1,0), y=1; f_2: x=(0,2), y=0; at β=(0,1):
        // r_1 = 1, grad_1 = (-1, 0); r_2 = -2, grad_2 = (0, 4).
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let p = LinearProblem::new(x, vec![1.0, 0.0], LinearLoss::LeastSquares);
        assert_eq!(vr_pivot(&p, &[0.0, 1.0], PivotScale::Mean).unwrap(), vec![-0.5, 2.0]);
        assert_eq!(vr_pivot(&p, &[0.0, 1.0], PivotScale::Sum).unwrap(), vec![-1.0, 4.0]);
    }

    #[test]
    fn shared_minimizer_gives_zero_mu() {
        let beta = [1.0, -1.0];
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.5]]);
        let y = vec![-1.0, 2.5];
        let p = LinearProblem::new(x, y, LinearLoss::LeastSquares);
        assert!(vr_pivot(&p, &beta, PivotScale::Mean).unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn unbiased_over_all_samples() {
        let p = toy();
        let pivot = [0.7, 0.1];
        let beta = [-0.3, 0.9];
        let mu = vr_pivot(&p, &pivot, PivotScale::Mean).unwrap();
        let mut avg = [0.0; 2];
        for i in 0..3 {
            let g = vr_gradient(&p, &beta, &pivot, &mu, &[i]);
            avg[0] += g[0] / 3.0;
            avg[1] += g[1] / 3.0;
        }
        let full = vr_pivot(&p, &beta, PivotScale::Mean).unwrap();
        assert!((avg[0] - full[0]).abs() < 1e-12 && (avg[1] - full[1]).abs() < 1e-12);
    }

    #[test]
    fn single_sample_is_plain_gradient() {
        let x = DenseMatrix::from_rows(&[vec![2.0, -1.0]]);
        let p = LinearProblem::new(x, vec![0.5], LinearLoss::LeastSquares);
        let mu = vr_pivot(&p, &[0.4, 0.4], PivotScale::Mean).unwrap();
        let g = vr_gradient(&p, &[1.0, 0.0], &[0.4, 0.4], &mu, &[0]);
        let direct = p.loss_grad(0, &[1.0, 0.0]).1;
        assert!(g.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn default_inner_steps_is_five_n() {
        let p = toy();
        let cfg = OptimizerConfig { tau: 1, oversample: 0, warm_start_epochs: 0, ..OptimizerConfig::new(Variant::RadaVr, 0.01) };
        let mut steps = 0;
        rada_vr_run(&p, &cfg, vec![0.0; 2], 1, 1, |_| steps += 1).unwrap();
        assert_eq!(steps, 15);
    }

    #[test]
    fn zero_gradient_problem_stays_put() {
        let x = DenseMatrix::zeros(4, 3);
        let p = LinearProblem::new(x, vec![0.0; 4], LinearLoss::LeastSquares);
        let cfg = OptimizerConfig { tau: 1, oversample: 1, ..OptimizerConfig::new(Variant::RadaVr, 0.1) };
        let beta0 = vec![0.5, -1.0, 2.0];
        let run = rada_vr_run(&p, &cfg, beta0.clone(), 3, 1, |_| {}).unwrap();
        assert_eq!(run.beta, beta0);
    }

    #[test]
    fn rejects_other_variants() {
        let cfg = OptimizerConfig::new(Variant::Radagrad, 0.1);
        assert!(rada_vr_run(&toy(), &cfg, vec![0.0; 2], 1, 1, |_| {}).is_err());
    }
}
