//! Subsampled randomized Fourier transform `Π = sqrt(p/ℓ) S Θ D`.
//!
//! `D` flips signs, `Θ` is the unitary DFT realized as a real orthogonal
//! transform, and `S` keeps `ℓ` of its `p` real output slots. The real
//! transform takes the FFT of the (sign-flipped) input and lists, in order,
//! the DC coefficient, `sqrt(2)·Re c_k` and `sqrt(2)·Im c_k` for each
//! `0 < k < p/2`, and the Nyquist coefficient when `p` is even. That list
//! has exactly `p` entries and the same Euclidean norm as the input, so
//! `E ||Π g||² = ||g||²` over the random signs and slots.

use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng as _;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, Purpose};

/// Default number of extra sketch rows beyond the target rank.
pub const DEFAULT_OVERSAMPLE: usize = 10;

#[derive(Clone)]
pub struct SrftSketch {
    p: usize,
    ell: usize,
    signs: Vec<f64>,
    sample_indices: Vec<usize>,
    scale: f64,
    seed: u64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SrftSketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SrftSketch")
            .field("p", &self.p)
            .field("ell", &self.ell)
            .field("scale", &self.scale)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl PartialEq for SrftSketch {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.ell == other.ell
            && self.signs == other.signs
            && self.sample_indices == other.sample_indices
            && self.scale == other.scale
    }
}

impl SrftSketch {
    /// Builds a sketch `R^p -> R^ℓ` with `ℓ = tau + oversample`.
    ///
    /// Signs and slots are drawn from the sketch substream of `seed`.
    pub fn new(p: usize, tau: usize, oversample: usize, seed: u64) -> Result<Self> {
        Self::with_rng(p, tau, oversample, seed, &mut rng::substream(seed, 0, Purpose::Sketch))
    }

    pub(crate) fn with_rng(
        p: usize,
        tau: usize,
        oversample: usize,
        seed: u64,
        rng: &mut rng::Rng,
    ) -> Result<Self> {
        if tau == 0 {
            return Err(Error::config("tau", "must be at least 1"));
        }
        let ell = tau + oversample;
        if ell > p {
            return Err(Error::config(
                "tau",
                format!("tau + oversample = {ell} exceeds the dimension {p}"),
            ));
        }
        let signs = (0..p)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut sample_indices = sample(rng, p, ell).into_vec();
        sample_indices.sort_unstable();
        let fft = FftPlanner::new().plan_fft_forward(p);
        Ok(SrftSketch {
            p,
            ell,
            signs,
            sample_indices,
            scale: (p as f64 / ell as f64).sqrt(),
            seed,
            fft,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `Π g`.
    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.p {
            return Err(Error::dim(
                "srft_apply",
                format!("vector of length {} for a sketch of dimension {}", g.len(), self.p),
            ));
        }
        let mut buf: Vec<Complex<f64>> = g
            .iter()
            .zip(&self.signs)
            .map(|(x, s)| Complex::new(x * s, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let unitary = 1.0 / (self.p as f64).sqrt();
        Ok(self
            .sample_indices
            .iter()
            .map(|&slot| self.scale * unitary * real_slot(&buf, slot))
            .collect())
    }

    /// `A Π^T`, sketching every row of `A` (p columns) into ℓ columns.
    pub fn apply_rows(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.cols() != self.p {
            return Err(Error::dim(
                "srft_apply_rows",
                format!("matrix with {} columns for a sketch of dimension {}", a.cols(), self.p),
            ));
        }
        let mut out = DenseMatrix::zeros(a.rows(), self.ell);
        for i in 0..a.rows() {
            let row = self.apply(a.row(i))?;
            out.row_mut(i).copy_from_slice(&row);
        }
        Ok(out)
    }
}

/// Entry `slot` of the real orthogonal reordering of a real-input spectrum.
#[inline]
fn real_slot(spec: &[Complex<f64>], slot: usize) -> f64 {
    let p = spec.len();
    if slot == 0 {
        return spec[0].re;
    }
    if p % 2 == 0 && slot == p - 1 {
        return spec[p / 2].re;
    }
    let k = (slot + 1) / 2;
    if slot % 2 == 1 {
        std::f64::consts::SQRT_2 * spec[k].re
    } else {
        std::f64::consts::SQRT_2 * spec[k].im
    }
}

/// Convenience wrapper matching the free-function form of the other kernels.
pub fn srft_new(p: usize, tau: usize, oversample: usize, seed: u64) -> Result<SrftSketch> {
    SrftSketch::new(p, tau, oversample, seed)
}

pub fn srft_apply(s: &SrftSketch, g: &[f64]) -> Result<Vec<f64>> {
    s.apply(g)
}
