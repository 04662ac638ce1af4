//! Per-sample losses for linear models. Gradients are gradients of the loss
//! (descent convention).

use crate::linalg::dot;

/// `½ (y - x^T β)²` and its gradient `-x (y - x^T β)`.
pub fn least_squares_grad(x: &[f64], y: f64, beta: &[f64]) -> (f64, Vec<f64>) {
    let r = y - dot(x, beta);
    (0.5 * r * r, x.iter().map(|xi| -xi * r).collect())
}

/// `log(1 + exp(-z))` without overflow.
pub fn softplus_neg(z: f64) -> f64 {
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-z))` without overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-y x^T β))` and its gradient `-y x σ(-y x^T β)`, for
/// `y ∈ {-1, +1}`.
pub fn logistic_grad(x: &[f64], y: f64, beta: &[f64]) -> (f64, Vec<f64>) {
    let z = y * dot(x, beta);
    let w = -y * sigmoid(-z);
    (softplus_neg(z), x.iter().map(|xi| w * xi).collect())
}
