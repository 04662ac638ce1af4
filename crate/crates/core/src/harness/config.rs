//! Run configuration: flat `key=value` text, experiment defaults, flag
//! overrides, and the resolved echo.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optim::{OptimizerConfig, PivotScale, Variant, DEFAULT_DELTA};
use crate::problems::{Activation, CovarianceSpec};
use crate::sketch::DEFAULT_OVERSAMPLE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SyntheticClassification,
    LeastSquares,
    Mlp,
    Timing,
    AppendixChecks,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::SyntheticClassification,
        Experiment::LeastSquares,
        Experiment::Mlp,
        Experiment::Timing,
        Experiment::AppendixChecks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SyntheticClassification => "synthetic_classification",
            Experiment::LeastSquares => "least_squares",
            Experiment::Mlp => "mlp",
            Experiment::Timing => "timing",
            Experiment::AppendixChecks => "appendix_checks",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment {s:?}")))
    }
}

/// Class separation used by the synthetic classification task.
pub const DEFAULT_SEPARATION: f64 = 20.0;

/// Nine log-spaced step sizes from 1e-3 to 1e1.
pub fn default_eta_grid() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub optimizers: Vec<Variant>,
    /// Step size for every optimizer; `None` means tune.
    pub eta: Option<f64>,
    /// Per-optimizer step sizes, taking precedence over `eta`.
    pub eta_by_optimizer: BTreeMap<Variant, f64>,
    pub delta: f64,
    pub tau: usize,
    pub oversample: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub data_seed: u64,
    pub n: usize,
    pub p: usize,
    pub lambda0: f64,
    pub alpha: f64,
    pub separation: f64,
    /// Label noise standard deviation for least squares.
    pub noise: f64,
    pub hidden: usize,
    pub activation: Activation,
    pub eta_grid: Vec<f64>,
    pub tune_epochs: usize,
    pub vr_update_freq: Option<usize>,
    pub warm_start_epochs: usize,
    pub warm_start_eta: Option<f64>,
    pub pivot_scale: PivotScale,
    pub log_every: usize,
    /// Record measured step times; off keeps every output byte-reproducible.
    pub wall_clock: bool,
    pub spectrum_top_k: usize,
    pub timing_p: Vec<usize>,
    pub timing_reps: usize,
    pub out: PathBuf,
}

impl RunConfig {
    /// Defaults for an experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = RunConfig {
            experiment,
            optimizers: vec![Variant::AdagradDiag, Variant::AdaFull, Variant::AdaLr, Variant::Radagrad],
            eta: None,
            eta_by_optimizer: BTreeMap::new(),
            delta: DEFAULT_DELTA,
            tau: 60,
            oversample: DEFAULT_OVERSAMPLE,
            epochs: 5,
            batch_size: 1,
            seeds: (0..5).collect(),
            data_seed: 0,
            n: 1000,
            p: 125,
            lambda0: 30.0,
            alpha: 1.3,
            separation: DEFAULT_SEPARATION,
            noise: 0.1,
            hidden: 32,
            activation: Activation::Tanh,
            eta_grid: default_eta_grid(),
            tune_epochs: 1,
            vr_update_freq: None,
            warm_start_epochs: 1,
            warm_start_eta: None,
            pivot_scale: PivotScale::Mean,
            log_every: 50,
            wall_clock: false,
            spectrum_top_k: 10,
            timing_p: vec![256, 512, 1024, 2048],
            timing_reps: 20,
            out: PathBuf::from("out"),
        };
        match experiment {
            Experiment::Mlp => {
                c.p = 20;
                c.tau = 20;
                c.batch_size = 8;
                c.optimizers = vec![Variant::AdagradDiag, Variant::Radagrad, Variant::RadaVr];
            }
            Experiment::Timing => {
                c.tau = 32;
                c.optimizers = vec![Variant::Radagrad];
            }
            _ => {}
        }
        c
    }

    pub fn covariance(&self) -> CovarianceSpec {
        CovarianceSpec { p: self.p, lambda0: self.lambda0, alpha: self.alpha }
    }

    /// Optimizer settings for one variant and seed.
    pub fn optimizer(&self, variant: Variant, eta: f64, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            delta: self.delta,
            tau: self.tau,
            oversample: self.oversample,
            seed,
            vr_update_freq: self.vr_update_freq,
            warm_start_epochs: self.warm_start_epochs,
            warm_start_eta: self.warm_start_eta,
            pivot_scale: self.pivot_scale,
            ..OptimizerConfig::new(variant, eta)
        }
    }

    /// Fixed step size for `variant`, if any.
    pub fn eta_for(&self, variant: Variant) -> Option<f64> {
        self.eta_by_optimizer.get(&variant).copied().or(self.eta)
    }

    /// Applies one `key=value` setting. Errors name the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        if let Some(opt) = key.strip_prefix("eta.") {
            let variant: Variant = opt
                .parse()
                .map_err(|_| Error::config(key, format!("unknown optimizer {opt:?}")))?;
            if v == "auto" {
                self.eta_by_optimizer.remove(&variant);
            } else {
                self.eta_by_optimizer.insert(variant, positive(key, v)?);
            }
            return Ok(());
        }
        match key {
            "experiment" => self.experiment = v.parse()?,
            "optimizers" | "optimizer" => {
                self.optimizers = list(key, v, |s| s.parse::<Variant>())?;
                if self.optimizers.is_empty() {
                    return Err(Error::config(key, "empty list"));
                }
            }
            "eta" => self.eta = if v == "auto" { None } else { Some(positive(key, v)?) },
            "delta" => {
                let d = float(key, v)?;
                if d < 0.0 {
                    return Err(Error::config(key, format!("must be nonnegative, got {d}")));
                }
                self.delta = d;
            }
            "tau" => self.tau = at_least(key, v, 1)?,
            "oversample" => self.oversample = int(key, v)?,
            "epochs" => self.epochs = int(key, v)?,
            "batch_size" => self.batch_size = at_least(key, v, 1)?,
            "seeds" | "seed" => {
                self.seeds = list(key, v, |s| s.parse::<u64>())?;
                if self.seeds.is_empty() {
                    return Err(Error::config(key, "empty list"));
                }
            }
            "data_seed" => self.data_seed = v.parse().map_err(|e| Error::config(key, format!("{e}")))?,
            "n" => {
                let n = at_least(key, v, 2)?;
                if n % 2 != 0 {
                    return Err(Error::config(key, format!("must be even, got {n}")));
                }
                self.n = n;
            }
            "p" => self.p = at_least(key, v, 1)?,
            "lambda0" => self.lambda0 = positive(key, v)?,
            "alpha" => {
                let a = float(key, v)?;
                if a < 0.0 {
                    return Err(Error::config(key, format!("must be nonnegative, got {a}")));
                }
                self.alpha = a;
            }
            "separation" => {
                let s = float(key, v)?;
                if s < 0.0 {
                    return Err(Error::config(key, format!("must be nonnegative, got {s}")));
                }
                self.separation = s;
            }
            "noise" => {
                let s = float(key, v)?;
                if s < 0.0 {
                    return Err(Error::config(key, format!("must be nonnegative, got {s}")));
                }
                self.noise = s;
            }
            "hidden" => self.hidden = at_least(key, v, 1)?,
            "activation" => {
                self.activation = match v {
                    "tanh" => Activation::Tanh,
                    "relu" => Activation::Relu,
                    _ => return Err(Error::config(key, format!("expected tanh or relu, got {v:?}"))),
                }
            }
            "eta_grid" => {
                self.eta_grid = list(key, v, |s| {
                    s.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()).ok_or(())
                })?;
                if self.eta_grid.is_empty() {
                    return Err(Error::config(key, "empty grid"));
                }
            }
            "tune_epochs" => self.tune_epochs = at_least(key, v, 1)?,
            "vr_update_freq" => {
                self.vr_update_freq = if v == "auto" { None } else { Some(at_least(key, v, 1)?) }
            }
            "warm_start_epochs" => self.warm_start_epochs = int(key, v)?,
            "warm_start_eta" => {
                self.warm_start_eta = if v == "auto" { None } else { Some(positive(key, v)?) }
            }
            "pivot_scale" => {
                self.pivot_scale = match v {
                    "mean" => PivotScale::Mean,
                    "sum" => PivotScale::Sum,
                    _ => return Err(Error::config(key, format!("expected mean or sum, got {v:?}"))),
                }
            }
            "log_every" => self.log_every = at_least(key, v, 1)?,
            "wall_clock" => {
                self.wall_clock = v.parse().map_err(|_| Error::config(key, format!("expected true or false, got {v:?}")))?
            }
            "spectrum_top_k" => self.spectrum_top_k = at_least(key, v, 1)?,
            "timing_p" => {
                self.timing_p = list(key, v, |s| s.parse::<usize>().ok().filter(|&p| p > 0).ok_or(()))?;
                if self.timing_p.len() < 2 {
                    return Err(Error::config(key, "need at least two sizes"));
                }
            }
            "timing_reps" => self.timing_reps = at_least(key, v, 5)?,
            "out" => {
                if v.is_empty() {
                    return Err(Error::config(key, "empty path"));
                }
                self.out = PathBuf::from(v);
            }
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<()> {
        self.covariance().validate()?;
        let needs_sketch = self.optimizers.iter().any(|v| v.is_randomized());
        let dim = match self.experiment {
            Experiment::Mlp => crate::problems::MlpSpec::new(vec![self.p, self.hidden, 2], self.activation)?.param_count(),
            _ => self.p,
        };
        let sketch_dims_matter = matches!(
            self.experiment,
            Experiment::SyntheticClassification | Experiment::LeastSquares | Experiment::Mlp
        );
        if sketch_dims_matter && needs_sketch && self.tau + self.oversample > dim {
            return Err(Error::config(
                "tau",
                format!("tau + oversample = {} exceeds the parameter dimension {dim}", self.tau + self.oversample),
            ));
        }
        Ok(())
    }

    /// Canonical `key=value` lines; parsing them back gives an equal config.
    pub fn to_kv(&self) -> String {
        let opt = |o: Option<f64>| o.map_or("auto".to_string(), |v| v.to_string());
        let join = |v: Vec<String>| v.join(",");
        let mut lines = vec![
            format!("experiment={}", self.experiment),
            format!("optimizers={}", join(self.optimizers.iter().map(|v| v.to_string()).collect())),
            format!("eta={}", opt(self.eta)),
        ];
        for (v, e) in &self.eta_by_optimizer {
            lines.push(format!("eta.{v}={e}"));
        }
        lines.extend([
            format!("delta={}", self.delta),
            format!("tau={}", self.tau),
            format!("oversample={}", self.oversample),
            format!("epochs={}", self.epochs),
            format!("batch_size={}", self.batch_size),
            format!("seeds={}", join(self.seeds.iter().map(|s| s.to_string()).collect())),
            format!("data_seed={}", self.data_seed),
            format!("n={}", self.n),
            format!("p={}", self.p),
            format!("lambda0={}", self.lambda0),
            format!("alpha={}", self.alpha),
            format!("separation={}", self.separation),
            format!("noise={}", self.noise),
            format!("hidden={}", self.hidden),
            format!(
                "activation={}",
                match self.activation {
                    Activation::Tanh => "tanh",
                    Activation::Relu => "relu",
                }
            ),
            format!("eta_grid={}", join(self.eta_grid.iter().map(|e| e.to_string()).collect())),
            format!("tune_epochs={}", self.tune_epochs),
            format!("vr_update_freq={}", self.vr_update_freq.map_or("auto".to_string(), |m| m.to_string())),
            format!("warm_start_epochs={}", self.warm_start_epochs),
            format!("warm_start_eta={}", opt(self.warm_start_eta)),
            format!(
                "pivot_scale={}",
                match self.pivot_scale {
                    PivotScale::Mean => "mean",
                    PivotScale::Sum => "sum",
                }
            ),
            format!("log_every={}", self.log_every),
            format!("wall_clock={}", self.wall_clock),
            format!("spectrum_top_k={}", self.spectrum_top_k),
            format!("timing_p={}", join(self.timing_p.iter().map(|p| p.to_string()).collect())),
            format!("timing_reps={}", self.timing_reps),
            format!("out={}", self.out.display()),
        ]);
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {}", lineno + 1), format!("expected key=value, got {line:?}"))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Resolves a configuration: defaults of the experiment (taken from the
/// overrides, else the file, else synthetic classification), then file
/// settings, then overrides in order.
pub fn parse_config(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let file_pairs = match file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
            parse_kv(&text)?
        }
        None => Vec::new(),
    };
    let experiment = overrides
        .iter()
        .chain(&file_pairs)
        .rev()
        .find(|(k, _)| k == "experiment")
        .map(|(_, v)| v.parse::<Experiment>())
        .transpose()?;
    // Overrides are searched first but the last occurrence wins, so pick the
    // last override if present, else the last file entry.
    let experiment = overrides
        .iter()
        .rev()
        .find(|(k, _)| k == "experiment")
        .map(|(_, v)| v.parse::<Experiment>())
        .transpose()?
        .or(experiment)
        .unwrap_or(Experiment::SyntheticClassification);
    let mut cfg = RunConfig::defaults(experiment);
    for (k, v) in file_pairs.iter().chain(overrides) {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Creates the output directory and confirms it is writable.
pub fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::config("out", format!("{}: {e}", dir.display())))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| Error::config("out", format!("{} is not writable: {e}", dir.display())))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn float(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::config(key, format!("expected a number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(Error::config(key, format!("must be finite, got {v}")));
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x = float(key, v)?;
    if x <= 0.0 {
        return Err(Error::config(key, format!("must be positive, got {x}")));
    }
    Ok(x)
}

fn int(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::config(key, format!("expected a nonnegative integer, got {v:?}")))
}

fn at_least(key: &str, v: &str, min: usize) -> Result<usize> {
    let x = int(key, v)?;
    if x < min {
        return Err(Error::config(key, format!("must be at least {min}, got {x}")));
    }
    Ok(x)
}

fn list<T, E>(key: &str, v: &str, f: impl Fn(&str) -> std::result::Result<T, E>) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).map_err(|_| Error::config(key, format!("bad list entry {s:?}"))))
        .collect()
}
