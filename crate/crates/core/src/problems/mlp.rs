//! Fully connected network with softmax cross-entropy output.
//!
//! Parameters are flattened layer by layer as `W_l` (out×in, row-major)
//! followed by `b_l`.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => a.tanh(),
            Activation::Relu => a.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `a` and output `h`.
    fn derivative(self, a: f64, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Input width, hidden widths, number of classes.
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::config("mlp widths", format!("{widths:?}")));
        }
        Ok(MlpSpec { widths, activation })
    }

    /// One tanh hidden layer of width 32, two classes.
    pub fn default_for(input: usize) -> Self {
        MlpSpec { widths: vec![input, 32, 2], activation: Activation::Tanh }
    }

    pub fn num_classes(&self) -> usize {
        *self.widths.last().expect("validated")
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Gaussian weights with variance `1/fan_in`, zero biases.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = substream(seed, 0, Purpose::Init);
        let mut out = Vec::with_capacity(self.param_count());
        for w in self.widths.windows(2) {
            let normal = Normal::new(0.0, (1.0 / w[0] as f64).sqrt()).expect("positive std");
            out.extend((0..w[0] * w[1]).map(|_| normal.sample(&mut rng)));
            out.extend(std::iter::repeat(0.0).take(w[1]));
        }
        out
    }

    fn check(&self, params: &[f64], x: &DenseMatrix, labels: &[usize]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dim(
                "mlp_loss_grad",
                format!("{} parameters for an architecture with {}", params.len(), self.param_count()),
            ));
        }
        if x.cols() != self.widths[0] || x.rows() != labels.len() {
            return Err(Error::dim(
                "mlp_loss_grad",
                format!("batch {}x{} with {} labels, input width {}", x.rows(), x.cols(), labels.len(), self.widths[0]),
            ));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= self.num_classes()) {
            return Err(Error::dim("mlp_loss_grad", format!("label {c} out of range")));
        }
        Ok(())
    }
}

/// Mean cross-entropy over the batch rows of `x` and its gradient.
pub fn mlp_loss_grad(
    spec: &MlpSpec,
    params: &[f64],
    x: &DenseMatrix,
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    spec.check(params, x, labels)?;
    let layers = spec.widths.len() - 1;
    let mut offsets = Vec::with_capacity(layers);
    let mut off = 0;
    for w in spec.widths.windows(2) {
        offsets.push(off);
        off += w[1] * (w[0] + 1);
    }
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let m = x.rows();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let scale = 1.0 / m as f64;
    // Per-layer pre-activations and outputs for one sample.
    let mut pre: Vec<Vec<f64>> = spec.widths[1..].iter().map(|&w| vec![0.0; w]).collect();
    let mut out: Vec<Vec<f64>> = spec.widths[1..].iter().map(|&w| vec![0.0; w]).collect();
    for (r, &label) in labels.iter().enumerate() {
        for l in 0..layers {
            let (n_in, n_out) = (spec.widths[l], spec.widths[l + 1]);
            let w = &params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &params[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
            let input: &[f64] = if l == 0 { x.row(r) } else { &out[l - 1] };
            let a: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(wi, xi)| wi * xi).sum::<f64>())
                .collect();
            let h: Vec<f64> = if l + 1 == layers {
                a.clone()
            } else {
                a.iter().map(|&v| spec.activation.apply(v)).collect()
            };
            pre[l] = a;
            out[l] = h;
        }
        let logits = &out[layers - 1];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += scale * (lse - logits[label]);
        let mut delta: Vec<f64> = logits.iter().map(|z| scale * (z - lse).exp()).collect();
        delta[label] -= scale;
        for l in (0..layers).rev() {
            let (n_in, n_out) = (spec.widths[l], spec.widths[l + 1]);
            let input: &[f64] = if l == 0 { x.row(r) } else { &out[l - 1] };
            let wo = offsets[l];
            let bo = wo + n_in * n_out;
            for o in 0..n_out {
                let d = delta[o];
                grad[bo + o] += d;
                if d != 0.0 {
                    for (gi, xi) in grad[wo + o * n_in..wo + (o + 1) * n_in].iter_mut().zip(input) {
                        *gi += d * xi;
                    }
                }
            }
            if l > 0 {
                let w = &params[wo..bo];
                let mut back = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d != 0.0 {
                        for (bi, wi) in back.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *bi += d * wi;
                        }
                    }
                }
                delta = back
                    .iter()
                    .zip(&pre[l - 1])
                    .zip(&out[l - 1])
                    .map(|((g, &a), &h)| g * spec.activation.derivative(a, h))
                    .collect();
            }
        }
    }
    Ok((loss, grad))
}

/// Fraction of rows whose arg-max logit equals the label.
pub fn mlp_accuracy(spec: &MlpSpec, params: &[f64], x: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    spec.check(params, x, labels)?;
    let mut offsets = Vec::new();
    let mut off = 0;
    for w in spec.widths.windows(2) {
        offsets.push(off);
        off += w[1] * (w[0] + 1);
    }
    let layers = spec.widths.len() - 1;
    let mut correct = 0usize;
    for (r, &label) in labels.iter().enumerate() {
        let mut h = x.row(r).to_vec();
        for l in 0..layers {
            let (n_in, n_out) = (spec.widths[l], spec.widths[l + 1]);
            let w = &params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &params[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
            h = (0..n_out)
                .map(|o| {
                    let a = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&h).map(|(wi, xi)| wi * xi).sum::<f64>();
                    if l + 1 == layers { a } else { spec.activation.apply(a) }
                })
                .collect();
        }
        let best = (0..h.len()).fold(0, |b, j| if h[j] > h[b] { j } else { b });
        correct += usize::from(best == label);
    }
    Ok(correct as f64 / labels.len().max(1) as f64)
}
