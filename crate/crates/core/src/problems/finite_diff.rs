//! Central finite-difference gradient check.

use crate::linalg::norm;

/// Relative error `||g - g_fd|| / max(||g||, ||g_fd||, 1e-8)` between the
/// analytic gradient of `f` at `theta` and central differences with step
/// `h_j = 1e-5 (1 + |θ_j|)`.
pub fn check_gradient(theta: &[f64], mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>)) -> f64 {
    let (_, g) = f(theta);
    let fd = finite_difference(theta, |t| f(t).0);
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&g).max(norm(&fd)).max(1e-8)
}

pub fn finite_difference(theta: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|j| {
            let h = 1e-5 * (1.0 + theta[j].abs());
            t[j] = theta[j] + h;
            let up = f(&t);
            t[j] = theta[j] - h;
            let down = f(&t);
            t[j] = theta[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let fd = finite_difference(&[1.0, -2.0], |t| t[0] * t[0] + 3.0 * t[1]);
        assert!((fd[0] - 2.0).abs() < 1e-9 && (fd[1] - 3.0).abs() < 1e-9);
        let rel = check_gradient(&[1.0, -2.0], |t| (t[0] * t[0], vec![2.0 * t[0], 1.0]));
        assert!(rel > 0.1);
    }
}
