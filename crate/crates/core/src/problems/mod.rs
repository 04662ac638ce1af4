//! Objectives and data generators.

pub mod data;
pub mod finite_diff;
pub mod loss;
pub mod mlp;

pub use data::{effective_rank, gen_classification, gen_covariance, gen_regression, Covariance, CovarianceSpec, Dataset};
pub use loss::{least_squares_grad, logistic_grad};
pub use mlp::{mlp_accuracy, mlp_loss_grad, Activation, MlpSpec};

use crate::error::Result;
use crate::linalg::{axpy, dot, DenseMatrix};

/// `f(β) = (1/n) Σ_i f_i(β)` with per-sample access.
pub trait FiniteSum {
    fn n(&self) -> usize;

    fn dim(&self) -> usize;

    fn loss_grad(&self, i: usize, beta: &[f64]) -> (f64, Vec<f64>);

    /// Mean loss and gradient over a batch of sample indices.
    fn batch_loss_grad(&self, idx: &[usize], beta: &[f64]) -> (f64, Vec<f64>) {
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.dim()];
        let w = 1.0 / idx.len().max(1) as f64;
        for &i in idx {
            let (l, g) = self.loss_grad(i, beta);
            loss += w * l;
            axpy(w, &g, &mut grad);
        }
        (loss, grad)
    }

    fn mean_loss(&self, beta: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.n()).collect();
        self.batch_loss_grad(&all, beta).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearLoss {
    Logistic,
    LeastSquares,
}

/// Linear model over the rows of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub loss: LinearLoss,
}

impl LinearProblem {
    pub fn new(x: DenseMatrix, y: Vec<f64>, loss: LinearLoss) -> Self {
        assert_eq!(x.rows(), y.len());
        LinearProblem { x, y, loss }
    }

    pub fn from_dataset(d: &Dataset, idx: &[usize], loss: LinearLoss) -> Self {
        let (x, y) = d.subset(idx);
        LinearProblem { x, y, loss }
    }

    /// Fraction of samples with `sign(x^T β) = y`; zero margins count as
    /// errors.
    pub fn accuracy(&self, beta: &[f64]) -> f64 {
        let hits = (0..self.n())
            .filter(|&i| self.y[i] * dot(self.x.row(i), beta) > 0.0)
            .count();
        hits as f64 / self.n().max(1) as f64
    }
}

impl FiniteSum for LinearProblem {
    fn n(&self) -> usize {
        self.x.rows()
    }

    fn dim(&self) -> usize {
        self.x.cols()
    }

    fn loss_grad(&self, i: usize, beta: &[f64]) -> (f64, Vec<f64>) {
        match self.loss {
            LinearLoss::Logistic => logistic_grad(self.x.row(i), self.y[i], beta),
            LinearLoss::LeastSquares => least_squares_grad(self.x.row(i), self.y[i], beta),
        }
    }
}

/// Classifier network over the rows of `x`; `labels` are class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpProblem {
    pub spec: MlpSpec,
    pub x: DenseMatrix,
    pub labels: Vec<usize>,
}

impl MlpProblem {
    /// Labels `+1 -> 1`, anything else `-> 0`.
    pub fn from_dataset(spec: MlpSpec, d: &Dataset, idx: &[usize]) -> Self {
        let (x, y) = d.subset(idx);
        let labels = y.iter().map(|&v| usize::from(v > 0.0)).collect();
        MlpProblem { spec, x, labels }
    }

    fn rows(&self, idx: &[usize]) -> (DenseMatrix, Vec<usize>) {
        let p = self.x.cols();
        let mut x = DenseMatrix::zeros(idx.len(), p);
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).copy_from_slice(self.x.row(i));
        }
        (x, idx.iter().map(|&i| self.labels[i]).collect())
    }

    pub fn accuracy(&self, params: &[f64]) -> Result<f64> {
        mlp_accuracy(&self.spec, params, &self.x, &self.labels)
    }
}

impl FiniteSum for MlpProblem {
    fn n(&self) -> usize {
        self.x.rows()
    }

    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn loss_grad(&self, i: usize, beta: &[f64]) -> (f64, Vec<f64>) {
        self.batch_loss_grad(&[i], beta)
    }

    fn batch_loss_grad(&self, idx: &[usize], beta: &[f64]) -> (f64, Vec<f64>) {
        let (x, labels) = self.rows(idx);
        mlp_loss_grad(&self.spec, beta, &x, &labels).expect("shapes fixed at construction")
    }

    fn mean_loss(&self, beta: &[f64]) -> f64 {
        mlp_loss_grad(&self.spec, beta, &self.x, &self.labels)
            .expect("shapes fixed at construction")
            .0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_is_mean_of_samples() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]);
        let prob = LinearProblem::new(x, vec![1.0, -1.0, 1.0], LinearLoss::LeastSquares);
        let beta = [0.5, -0.25];
        let (l, g) = prob.batch_loss_grad(&[0, 1, 2], &beta);
        let mut lo = 0.0;
        let mut go = [0.0; 2];
        for i in 0..3 {
            let (li, gi) = prob.loss_grad(i, &beta);
            lo += li / 3.0;
            go[0] += gi[0] / 3.0;
            go[1] += gi[1] / 3.0;
        }
        assert!((l - lo).abs() < 1e-15);
        assert!((g[0] - go[0]).abs() < 1e-15 && (g[1] - go[1]).abs() < 1e-15);
        assert!((prob.mean_loss(&beta) - l).abs() < 1e-15);
    }

    #[test]
    fn mlp_problem_batches() {
        let spec = MlpSpec::new(vec![2, 3, 2], Activation::Tanh).unwrap();
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.2, -1.0]]);
        let prob = MlpProblem { spec: spec.clone(), x, labels: vec![0, 1, 1] };
        let params = spec.init_params(2);
        let (l, g) = prob.batch_loss_grad(&[0, 2], &params);
        let (l0, g0) = prob.loss_grad(0, &params);
        let (l2, g2) = prob.loss_grad(2, &params);
        assert!((l - 0.5 * (l0 + l2)).abs() < 1e-14);
        for j in 0..g.len() {
            assert!((g[j] - 0.5 * (g0[j] + g2[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn accuracy_counts_signs() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![2.0], vec![0.0]]);
        let prob = LinearProblem::new(x, vec![1.0, -1.0, -1.0, 1.0], LinearLoss::Logistic);
        assert_eq!(prob.accuracy(&[1.0]), 0.5);
    }
}
