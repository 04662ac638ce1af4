//! Gaussian two-class data with a power-law covariance spectrum.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::random::{gaussian_vec, random_orthonormal};
use crate::linalg::DenseMatrix;
use crate::rng::{substream, Purpose};

/// Fraction of samples assigned to the training split.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    pub p: usize,
    pub lambda0: f64,
    pub alpha: f64,
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("p", "must be at least 1"));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::config("lambda0", format!("must be positive, got {}", self.lambda0)));
        }
        // α = 0 (isotropic) is allowed as a degenerate case.
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", format!("must be nonnegative, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `λ_j = λ_0 j^{-α}`, `j = 1..=p`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.p)
            .map(|j| self.lambda0 * (j as f64).powf(-self.alpha))
            .collect()
    }
}

/// `Σ = Q diag(λ) Q^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub eigenvalues: Vec<f64>,
    pub rotation: DenseMatrix,
}

impl Covariance {
    pub fn matrix(&self) -> DenseMatrix {
        DenseMatrix::scaled_outer(&self.rotation, &self.eigenvalues, &self.rotation)
    }

    /// Leading eigenvector of `Σ`.
    pub fn top_direction(&self) -> Vec<f64> {
        self.rotation.col(0)
    }

    /// `Q diag(√λ) z`, a zero-mean draw with covariance `Σ`.
    pub fn transform(&self, z: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = z
            .iter()
            .zip(&self.eigenvalues)
            .map(|(zi, l)| zi * l.sqrt())
            .collect();
        self.rotation.matvec(&scaled)
    }
}

pub fn gen_covariance(spec: &CovarianceSpec, seed: u64) -> Result<Covariance> {
    spec.validate()?;
    let mut rng = substream(seed, 0, Purpose::Data);
    Ok(Covariance {
        eigenvalues: spec.eigenvalues(),
        rotation: random_orthonormal(spec.p, spec.p, &mut rng),
    })
}

/// `tr(Σ) / ||Σ||`.
pub fn effective_rank(eigenvalues: &[f64]) -> Result<f64> {
    if eigenvalues.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::NotPsd(
            eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
        ));
    }
    let max = eigenvalues.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::EmptyDataset);
    }
    Ok(eigenvalues.iter().sum::<f64>() / max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub spec: CovarianceSpec,
    pub separation: f64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Rows and labels of a subset, in the given order.
    pub fn subset(&self, idx: &[usize]) -> (DenseMatrix, Vec<f64>) {
        let p = self.p();
        let mut x = DenseMatrix::zeros(idx.len(), p);
        let mut y = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).copy_from_slice(self.x.row(i));
            y.push(self.y[i]);
        }
        (x, y)
    }

    /// Text dump: one header line, then `split,y,x_1,...,x_p` per sample with
    /// `split` 0 for train and 1 for test. Floats use the shortest
    /// round-tripping decimal form, so equal datasets give equal bytes.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# n={} p={} seed={} lambda0={} alpha={} separation={}",
            self.n(),
            self.p(),
            self.seed,
            self.spec.lambda0,
            self.spec.alpha,
            self.separation
        )?;
        let mut in_test = vec![false; self.n()];
        for &i in &self.test {
            in_test[i] = true;
        }
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            let _ = write!(line, "{},{}", u8::from(in_test[i]), self.y[i]);
            for v in self.x.row(i) {
                let _ = write!(line, ",{v}");
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Dataset> {
        let bad = |m: String| Error::config("dataset", m);
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::EmptyDataset)?
            .map_err(|e| bad(e.to_string()))?;
        let field = |name: &str| -> Result<String> {
            header
                .split_whitespace()
                .find_map(|t| t.strip_prefix(name).and_then(|t| t.strip_prefix('=')))
                .map(str::to_owned)
                .ok_or_else(|| bad(format!("header missing {name}")))
        };
        let parse = |s: String| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        let n = parse(field("n")?)? as usize;
        let p = parse(field("p")?)? as usize;
        let seed = field("seed")?.parse::<u64>().map_err(|e| bad(e.to_string()))?;
        let spec = CovarianceSpec {
            p,
            lambda0: parse(field("lambda0")?)?,
            alpha: parse(field("alpha")?)?,
        };
        let separation = parse(field("separation")?)?;
        let mut x = DenseMatrix::zeros(n, p);
        let mut y = Vec::with_capacity(n);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("expected {n} rows, got {i}")))?
                .map_err(|e| bad(e.to_string()))?;
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.parse::<f64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<_>>()?;
            if vals.len() != p + 2 {
                return Err(bad(format!("row {i} has {} fields", vals.len())));
            }
            if vals[0] == 0.0 {
                train.push(i);
            } else {
                test.push(i);
            }
            y.push(vals[1]);
            x.row_mut(i).copy_from_slice(&vals[2..]);
        }
        Ok(Dataset { x, y, train, test, seed, spec, separation })
    }
}

/// `n/2` samples from `N(+(s/2) u, Σ)` labelled `+1` and `n/2` from
/// `N(-(s/2) u, Σ)` labelled `-1`, with `u` the top eigenvector of `Σ`.
/// Labels alternate `+1, -1, ...`; the 80/20 split is a seeded permutation.
pub fn gen_classification(
    n: usize,
    spec: &CovarianceSpec,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if n % 2 != 0 {
        return Err(Error::config("n", format!("must be even, got {n}")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::config("separation", format!("must be nonnegative, got {separation}")));
    }
    let cov = gen_covariance(spec, seed)?;
    let u = cov.top_direction();
    let mut rng = substream(seed, 1, Purpose::Data);
    let mut x = DenseMatrix::zeros(n, spec.p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let z = gaussian_vec(spec.p, &mut rng);
        let mut row = cov.transform(&z);
        for (r, ui) in row.iter_mut().zip(&u) {
            *r += label * 0.5 * separation * ui;
        }
        x.row_mut(i).copy_from_slice(&row);
        y.push(label);
    }
    let (train, test) = split_indices(n, seed);
    Ok(Dataset { x, y, train, test, seed, spec: *spec, separation })
}

/// Seeded 80/20 split of `0..n`, each side sorted.
fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut substream(seed, 0, Purpose::Split));
    let n_train = ((n as f64) * TRAIN_FRACTION).round() as usize;
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Regression data `y = x^T β* + ε` with `x ~ N(0, Σ)`, `β* ~ N(0, I/p)` and
/// `ε ~ N(0, noise²)`. The returned dataset records `separation = 0`.
pub fn gen_regression(n: usize, spec: &CovarianceSpec, noise: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::config("noise", format!("must be nonnegative, got {noise}")));
    }
    let cov = gen_covariance(spec, seed)?;
    let scale = 1.0 / (spec.p as f64).sqrt();
    let beta_star: Vec<f64> = gaussian_vec(spec.p, &mut substream(seed, 2, Purpose::Data))
        .into_iter()
        .map(|b| b * scale)
        .collect();
    let mut rng = substream(seed, 1, Purpose::Data);
    let mut x = DenseMatrix::zeros(n, spec.p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row = cov.transform(&gaussian_vec(spec.p, &mut rng));
        let eps = noise * gaussian_vec(1, &mut rng)[0];
        y.push(row.iter().zip(&beta_star).map(|(a, b)| a * b).sum::<f64>() + eps);
        x.row_mut(i).copy_from_slice(&row);
    }
    let (train, test) = split_indices(n, seed);
    Ok((Dataset { x, y, train, test, seed, spec: *spec, separation: 0.0 }, beta_star))
}
