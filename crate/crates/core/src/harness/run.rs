//! Trials, step-size tuning and the CSV outputs of a run.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{LineWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;

use super::config::{prepare_output, Experiment, RunConfig};
use crate::diagnostics::{appendix_checks, exact_sqrt_spectrum, proximal_spectrum, timing_profile};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::optim::{rada_vr_run, OptimizerState, Variant};
use crate::problems::{
    gen_classification, gen_regression, Dataset, FiniteSum, LinearLoss, LinearProblem, MlpProblem, MlpSpec,
};
use crate::rng::{substream, Purpose};

pub const RECORD_HEADER: &str = "run_id,optimizer,seed,epoch,step,train_loss,test_metric,step_wall_us";
pub const AGGREGATE_HEADER: &str =
    "optimizer,epoch,runs,train_loss_mean,train_loss_std,test_metric_mean,test_metric_std";
pub const SPECTRUM_HEADER: &str = "run_id,optimizer,seed,source,rank,value";

/// Shadow accumulators are kept only up to this parameter dimension.
const SHADOW_MAX_DIM: usize = 1024;

/// One logged point of a training curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub optimizer: Variant,
    pub seed: u64,
    /// 1-based epoch the step belongs to.
    pub epoch: usize,
    /// Optimizer steps taken so far.
    pub step: usize,
    pub train_loss: f64,
    pub test_metric: f64,
    /// Mean measured step time since the previous record; 0 without
    /// `wall_clock`.
    pub step_wall_us: f64,
}

impl RunRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.run_id,
            self.optimizer,
            self.seed,
            self.epoch,
            self.step,
            self.train_loss,
            self.test_metric,
            self.step_wall_us
        )
    }
}

/// A training objective together with its evaluation metric.
#[derive(Debug, Clone)]
pub enum Task {
    Linear(LinearProblem),
    Mlp(MlpProblem),
}

impl Task {
    pub fn problem(&self) -> &dyn FiniteSum {
        match self {
            Task::Linear(p) => p,
            Task::Mlp(p) => p,
        }
    }

    pub fn dim(&self) -> usize {
        self.problem().dim()
    }

    /// Accuracy for classifiers, mean loss for regression.
    pub fn metric(&self, beta: &[f64]) -> Result<f64> {
        match self {
            Task::Linear(p) if p.loss == LinearLoss::LeastSquares => Ok(p.mean_loss(beta)),
            Task::Linear(p) => Ok(p.accuracy(beta)),
            Task::Mlp(p) => p.accuracy(beta),
        }
    }

    /// Zeros for linear models, seeded Gaussian weights for networks.
    pub fn init_beta(&self, seed: u64) -> Vec<f64> {
        match self {
            Task::Linear(p) => vec![0.0; p.dim()],
            Task::Mlp(p) => p.spec.init_params(seed),
        }
    }
}

/// Training and evaluation sides of an experiment.
#[derive(Debug, Clone)]
pub struct Workload {
    pub train: Task,
    pub eval: Task,
}

pub fn generate_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let spec = cfg.covariance();
    match cfg.experiment {
        Experiment::SyntheticClassification | Experiment::Mlp => {
            gen_classification(cfg.n, &spec, cfg.separation, cfg.data_seed)
        }
        Experiment::LeastSquares => Ok(gen_regression(cfg.n, &spec, cfg.noise, cfg.data_seed)?.0),
        e => Err(Error::config("experiment", format!("{e} has no dataset"))),
    }
}

fn task(cfg: &RunConfig, d: &Dataset, idx: &[usize]) -> Result<Task> {
    Ok(match cfg.experiment {
        Experiment::SyntheticClassification => Task::Linear(LinearProblem::from_dataset(d, idx, LinearLoss::Logistic)),
        Experiment::LeastSquares => Task::Linear(LinearProblem::from_dataset(d, idx, LinearLoss::LeastSquares)),
        Experiment::Mlp => {
            let spec = MlpSpec::new(vec![cfg.p, cfg.hidden, 2], cfg.activation)?;
            Task::Mlp(MlpProblem::from_dataset(spec, d, idx))
        }
        e => return Err(Error::config("experiment", format!("{e} has no training task"))),
    })
}

/// Train split against test split.
pub fn build_workload(cfg: &RunConfig, d: &Dataset) -> Result<Workload> {
    Ok(Workload { train: task(cfg, d, &d.train)?, eval: task(cfg, d, &d.test)? })
}

/// The train split divided 80/20 into a fitting part and a validation part.
pub fn build_tuning_workload(cfg: &RunConfig, d: &Dataset) -> Result<Workload> {
    let mut idx = d.train.clone();
    idx.shuffle(&mut substream(cfg.data_seed, 1, Purpose::Split));
    let cut = ((idx.len() as f64) * 0.8).round() as usize;
    let (fit, val) = idx.split_at(cut);
    if fit.is_empty() || val.is_empty() {
        return Err(Error::config("n", "too few samples for a validation split"));
    }
    Ok(Workload { train: task(cfg, d, fit)?, eval: task(cfg, d, val)? })
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub variant: Variant,
    pub seed: u64,
    pub eta: f64,
    pub beta: Vec<f64>,
    /// Mean training loss before training and after each epoch.
    pub train_loss: Vec<f64>,
    /// Evaluation metric after each epoch.
    pub test_metric: Vec<f64>,
    /// Per-sample gradient evaluations.
    pub grad_evals: usize,
    pub state: OptimizerState,
    /// `Σ g g^T` over the gradients the optimizer saw, when requested.
    pub shadow: Option<DenseMatrix>,
}

impl TrialResult {
    pub fn final_train_loss(&self) -> f64 {
        *self.train_loss.last().expect("initial loss is always recorded")
    }
}

/// Knobs of a single trial beyond the run configuration.
#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    pub epochs: usize,
    /// Emit records every `log_every` steps and at epoch ends.
    pub log: bool,
    /// Keep an exact gradient outer-product accumulator alongside.
    pub shadow: bool,
}

struct Logger<'a> {
    run_id: String,
    variant: Variant,
    seed: u64,
    enabled: bool,
    every: usize,
    wall_clock: bool,
    pending_us: f64,
    pending_steps: usize,
    sink: &'a mut dyn FnMut(&RunRecord) -> Result<()>,
}

impl Logger<'_> {
    fn timed<T>(&mut self, f: impl FnOnce() -> T) -> T {
        if !self.wall_clock {
            return f();
        }
        let start = Instant::now();
        let out = f();
        self.pending_us += start.elapsed().as_secs_f64() * 1e6;
        self.pending_steps += 1;
        out
    }

    fn emit(&mut self, work: &Workload, beta: &[f64], epoch: usize, step: usize) -> Result<(f64, f64)> {
        let train_loss = work.train.problem().mean_loss(beta);
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        let test_metric = work.eval.metric(beta)?;
        if self.enabled {
            let step_wall_us = if self.pending_steps > 0 { self.pending_us / self.pending_steps as f64 } else { 0.0 };
            (self.sink)(&RunRecord {
                run_id: self.run_id.clone(),
                optimizer: self.variant,
                seed: self.seed,
                epoch,
                step,
                train_loss,
                test_metric,
                step_wall_us,
            })?;
        }
        self.pending_us = 0.0;
        self.pending_steps = 0;
        Ok((train_loss, test_metric))
    }
}

/// Trains one optimizer on `work.train` from the task's initial point.
/// Epoch `e` visits the training set in the order drawn from the shuffle
/// substream `(seed, e)`; RADA-VR instead follows its own sampling.
pub fn run_trial(
    cfg: &RunConfig,
    work: &Workload,
    variant: Variant,
    eta: f64,
    seed: u64,
    opts: TrialOptions,
    sink: &mut dyn FnMut(&RunRecord) -> Result<()>,
) -> Result<TrialResult> {
    let problem = work.train.problem();
    let n = problem.n();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let dim = problem.dim();
    let ocfg = cfg.optimizer(variant, eta, seed);
    let beta0 = work.train.init_beta(seed);
    let mut log = Logger {
        run_id: run_id(variant, seed),
        variant,
        seed,
        enabled: opts.log,
        every: cfg.log_every,
        wall_clock: cfg.wall_clock && opts.log,
        pending_us: 0.0,
        pending_steps: 0,
        sink,
    };
    let mut train_loss = vec![problem.mean_loss(&beta0)];
    let mut test_metric = Vec::with_capacity(opts.epochs);

    if variant == Variant::RadaVr {
        let mut step = 0usize;
        let mut failure = None;
        let mut last = std::time::Instant::now();
        let m = cfg.vr_update_freq.unwrap_or(5 * n);
        let run = rada_vr_run(problem, &ocfg, beta0, opts.epochs, cfg.batch_size, |prog| {
            step += 1;
            if log.wall_clock {
                log.pending_us += last.elapsed().as_secs_f64() * 1e6;
                log.pending_steps += 1;
            }
            let end = prog.inner_step + 1 == m;
            if failure.is_none() && (step % log.every == 0 || end) {
                match log.emit(work, prog.beta, prog.epoch + 1, step) {
                    Ok((_, metric)) if end => test_metric.push(metric),
                    Ok(_) => {}
                    Err(e) => failure = Some(e),
                }
            }
            last = std::time::Instant::now();
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        train_loss.extend_from_slice(&run.epoch_losses[1..]);
        return Ok(TrialResult {
            variant,
            seed,
            eta,
            beta: run.beta,
            train_loss,
            test_metric,
            grad_evals: run.grad_evals,
            state: run.state,
            shadow: None,
        });
    }

    let mut state = OptimizerState::init(&ocfg, beta0)?;
    let mut shadow = (opts.shadow && dim <= SHADOW_MAX_DIM).then(|| DenseMatrix::zeros(dim, dim));
    let mut grad_evals = 0usize;
    for epoch in 0..opts.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut substream(seed, epoch as u64, Purpose::Shuffle));
        let batches = order.chunks(cfg.batch_size).count();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (_, g) = problem.batch_loss_grad(chunk, &state.beta);
            grad_evals += chunk.len();
            if let Some(s) = shadow.as_mut() {
                s.rank1_update(1.0, &g, &g);
            }
            log.timed(|| state.step(&g))?;
            let end = b + 1 == batches;
            if end || (opts.log && state.step % log.every == 0) {
                let (loss, metric) = log.emit(work, &state.beta, epoch + 1, state.step)?;
                if end {
                    train_loss.push(loss);
                    test_metric.push(metric);
                }
            }
        }
    }
    Ok(TrialResult {
        variant,
        seed,
        eta,
        beta: state.beta.clone(),
        train_loss,
        test_metric,
        grad_evals,
        state,
        shadow,
    })
}

pub fn run_id(variant: Variant, seed: u64) -> String {
    format!("{variant}-seed{seed}")
}

/// Step size with the smallest loss; ties go to the smaller step size and
/// non-finite losses or trial failures count as divergence.
pub fn select_eta(grid: &[f64], mut loss: impl FnMut(f64) -> Result<f64>) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::config("eta_grid", "empty grid"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut table = Vec::with_capacity(sorted.len());
    let mut best: Option<(f64, f64)> = None;
    for eta in sorted {
        let l = match loss(eta) {
            Ok(l) if l.is_finite() => l,
            Ok(_) | Err(Error::NonFinite(_) | Error::Singular(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        table.push((eta, l));
        if l.is_finite() && best.is_none_or(|(_, b)| l < b) {
            best = Some((eta, l));
        }
    }
    match best {
        Some((eta, _)) => Ok((eta, table)),
        None => Err(Error::Diverged(format!("{} grid points", table.len()))),
    }
}

/// Tunes `variant` on the validation split: one short trajectory per grid
/// point from the first seed, scored by the final validation loss.
pub fn tune_eta(cfg: &RunConfig, tuning: &Workload, variant: Variant, grid: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    let seed = cfg.seeds[0];
    let opts = TrialOptions { epochs: cfg.tune_epochs, log: false, shadow: false };
    select_eta(grid, |eta| {
        let r = run_trial(cfg, tuning, variant, eta, seed, opts, &mut |_| Ok(()))?;
        Ok(tuning.eval.problem().mean_loss(&r.beta))
    })
    .map_err(|e| match e {
        Error::Diverged(d) => Error::Diverged(format!("{variant}: {d}")),
        e => e,
    })
}

/// Outcome of one optimizer across seeds.
#[derive(Debug, Clone)]
pub struct OptimizerSummary {
    pub variant: Variant,
    pub eta: f64,
    pub tuned: bool,
    pub trials: Vec<TrialSummary>,
}

impl OptimizerSummary {
    pub fn mean_final_loss(&self) -> f64 {
        mean_std(&self.trials.iter().map(|t| t.train_loss[t.train_loss.len() - 1]).collect::<Vec<_>>()).0
    }
}

#[derive(Debug, Clone)]
pub struct TrialSummary {
    pub seed: u64,
    pub train_loss: Vec<f64>,
    pub test_metric: Vec<f64>,
    pub grad_evals: usize,
    /// Normalized top proximal eigenvalues at the final step.
    pub proximal: Option<Vec<f64>>,
    /// Normalized top eigenvalues of the exact `G_T^{1/2}` of the same run.
    pub exact: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub optimizers: Vec<OptimizerSummary>,
    pub tuning: Vec<(Variant, Vec<(f64, f64)>)>,
}

impl RunSummary {
    pub fn get(&self, v: Variant) -> Option<&OptimizerSummary> {
        self.optimizers.iter().find(|o| o.variant == v)
    }
}

/// Runs the configured experiment and writes its files under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    prepare_output(&cfg.out)?;
    write_file(&cfg.out.join("config.resolved"), &cfg.to_kv())?;
    match cfg.experiment {
        Experiment::Timing => run_timing(cfg).map(|_| RunSummary::default()),
        Experiment::AppendixChecks => run_checks(cfg).map(|_| RunSummary::default()),
        _ => run_training(cfg),
    }
}

/// Step sizes per optimizer, tuning those without a fixed value.
pub fn resolve_etas(cfg: &RunConfig, d: &Dataset) -> Result<(Vec<(Variant, f64, bool)>, Vec<(Variant, Vec<(f64, f64)>)>)> {
    let mut etas = Vec::new();
    let mut tables = Vec::new();
    let mut tuning = None;
    for &v in &cfg.optimizers {
        match cfg.eta_for(v) {
            Some(eta) => etas.push((v, eta, false)),
            None => {
                if tuning.is_none() {
                    tuning = Some(build_tuning_workload(cfg, d)?);
                }
                let (eta, table) = tune_eta(cfg, tuning.as_ref().unwrap(), v, &cfg.eta_grid)?;
                etas.push((v, eta, true));
                tables.push((v, table));
            }
        }
    }
    Ok((etas, tables))
}

fn run_training(cfg: &RunConfig) -> Result<RunSummary> {
    let d = generate_dataset(cfg)?;
    let work = build_workload(cfg, &d)?;
    let (etas, tuning) = resolve_etas(cfg, &d)?;
    if !tuning.is_empty() {
        let mut s = String::from("optimizer,eta,validation_loss\n");
        for (v, table) in &tuning {
            for (eta, l) in table {
                writeln!(s, "{v},{eta},{l}").unwrap();
            }
        }
        write_file(&cfg.out.join("tuning.csv"), &s)?;
    }

    let runs_dir = cfg.out.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| io_err(&runs_dir, e))?;
    let mut all_lines: Vec<String> = Vec::new();
    let mut spectrum = format!("{SPECTRUM_HEADER}\n");
    let mut summary = RunSummary { optimizers: Vec::new(), tuning };
    let opts = TrialOptions { epochs: cfg.epochs, log: true, shadow: true };

    for &(v, eta, tuned) in &etas {
        let mut trials = Vec::new();
        for &seed in &cfg.seeds {
            let id = run_id(v, seed);
            let path = runs_dir.join(format!("{id}.csv"));
            let file = File::create(&path).map_err(|e| io_err(&path, e))?;
            let mut w = LineWriter::new(file);
            writeln!(w, "{RECORD_HEADER}").map_err(|e| io_err(&path, e))?;
            let mut sink = |r: &RunRecord| -> Result<()> {
                let line = r.csv_line();
                writeln!(w, "{line}").map_err(|e| io_err(&path, e))?;
                all_lines.push(line);
                Ok(())
            };
            let result = run_trial(cfg, &work, v, eta, seed, opts, &mut sink);
            let result = match result {
                Ok(r) => r,
                Err(e) => {
                    write_records(cfg, &all_lines)?;
                    return Err(e);
                }
            };
            let k = cfg.spectrum_top_k;
            let proximal = match proximal_spectrum(&result.state, k) {
                Ok(rep) => Some(rep.values),
                Err(Error::UnsupportedVariant(_)) => None,
                Err(e) => return Err(e),
            };
            let exact = match (&result.shadow, v) {
                (Some(g), v) if v != Variant::Sgd => Some(exact_sqrt_spectrum(g, k)?),
                _ => None,
            };
            for (source, vals) in [("proximal", &proximal), ("exact", &exact)] {
                if let Some(vals) = vals {
                    for (i, x) in vals.iter().enumerate() {
                        writeln!(spectrum, "{id},{v},{seed},{source},{},{x}", i + 1).unwrap();
                    }
                }
            }
            trials.push(TrialSummary {
                seed,
                train_loss: result.train_loss,
                test_metric: result.test_metric,
                grad_evals: result.grad_evals,
                proximal,
                exact,
            });
        }
        summary.optimizers.push(OptimizerSummary { variant: v, eta, tuned, trials });
    }

    write_records(cfg, &all_lines)?;
    write_file(&cfg.out.join("spectrum.csv"), &spectrum)?;
    write_file(&cfg.out.join("aggregate.csv"), &aggregate_csv(&summary))?;
    write_file(&cfg.out.join("summary.txt"), &summary_text(cfg, &summary))?;
    Ok(summary)
}

fn write_records(cfg: &RunConfig, lines: &[String]) -> Result<()> {
    let mut s = format!("{RECORD_HEADER}\n");
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    write_file(&cfg.out.join("records.csv"), &s)
}

/// Sample mean and standard deviation (0 for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate_csv(summary: &RunSummary) -> String {
    let mut s = format!("{AGGREGATE_HEADER}\n");
    for o in &summary.optimizers {
        let epochs = o.trials.iter().map(|t| t.test_metric.len()).min().unwrap_or(0);
        for e in 1..=epochs {
            let loss: Vec<f64> = o.trials.iter().map(|t| t.train_loss[e]).collect();
            let metric: Vec<f64> = o.trials.iter().map(|t| t.test_metric[e - 1]).collect();
            let (lm, ls) = mean_std(&loss);
            let (mm, ms) = mean_std(&metric);
            writeln!(s, "{},{e},{},{lm},{ls},{mm},{ms}", o.variant, o.trials.len()).unwrap();
        }
    }
    s
}

fn summary_text(cfg: &RunConfig, summary: &RunSummary) -> String {
    let metric = match cfg.experiment {
        Experiment::LeastSquares => "test_loss",
        _ => "test_accuracy",
    };
    let mut s = format!(
        "experiment {}  epochs {}  seeds {}\n\n{:<14} {:>10} {:>6} {:>14} {:>12} {:>14}\n",
        cfg.experiment,
        cfg.epochs,
        cfg.seeds.len(),
        "optimizer",
        "eta",
        "tuned",
        "final_loss",
        "std",
        metric
    );
    for o in &summary.optimizers {
        let finals: Vec<f64> = o.trials.iter().map(|t| *t.train_loss.last().unwrap()).collect();
        let metrics: Vec<f64> = o.trials.iter().filter_map(|t| t.test_metric.last().copied()).collect();
        let (lm, ls) = mean_std(&finals);
        let mm = mean_std(&metrics).0;
        writeln!(
            s,
            "{:<14} {:>10.4e} {:>6} {:>14.6} {:>12.2e} {:>14.4}",
            o.variant.name(),
            o.eta,
            if o.tuned { "yes" } else { "no" },
            lm,
            ls,
            mm
        )
        .unwrap();
    }
    s
}

fn run_timing(cfg: &RunConfig) -> Result<()> {
    let mut csv = String::from("optimizer,p,tau,median_s\n");
    let mut text = format!("timing  tau {}  reps {}\n\n", cfg.tau, cfg.timing_reps);
    for &v in &cfg.optimizers {
        let prof = timing_profile(v, &cfg.timing_p, cfg.tau, cfg.timing_reps, cfg.seeds[0])?;
        for &(p, tau, t) in &prof.points {
            writeln!(csv, "{v},{p},{tau},{t}").unwrap();
        }
        writeln!(text, "{:<14} exponent {:.3}", v.name(), prof.exponent).unwrap();
    }
    write_file(&cfg.out.join("timing.csv"), &csv)?;
    write_file(&cfg.out.join("summary.txt"), &text)
}

fn run_checks(cfg: &RunConfig) -> Result<()> {
    let mut csv = String::from("seed,name,passed,slack,detail\n");
    let mut text = String::new();
    for &seed in &cfg.seeds {
        let report = appendix_checks(seed);
        for e in &report.entries {
            writeln!(csv, "{seed},{},{},{},\"{}\"", e.name, e.passed, e.slack, e.detail.replace('"', "'")).unwrap();
            writeln!(
                text,
                "seed {seed:<4} {:<20} {:<5} slack {:.3e}  {}",
                e.name,
                if e.passed { "pass" } else { "FAIL" },
                e.slack,
                e.detail
            )
            .unwrap();
        }
    }
    write_file(&cfg.out.join("checks.csv"), &csv)?;
    write_file(&cfg.out.join("summary.txt"), &text)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::config("out", format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment, dir: &Path) -> RunConfig {
        let mut c = RunConfig::defaults(experiment);
        c.n = 60;
        c.p = 12;
        c.tau = 2;
        c.oversample = 2;
        c.hidden = 4;
        c.epochs = 2;
        c.seeds = vec![0, 1];
        c.log_every = 10;
        c.eta = Some(0.1);
        c.out = dir.to_path_buf();
        c
    }

    #[test]
    fn select_eta_basics() {
        assert_eq!(select_eta(&[0.3], |_| Ok(1.0)).unwrap().0, 0.3);
        assert_eq!(select_eta(&[1.0, 0.1, 0.5], |_| Ok(2.0)).unwrap().0, 0.1);
        let err = select_eta(&[0.1, 1.0], |_| Err(Error::NonFinite("x".into()))).unwrap_err();
        assert!(matches!(err, Error::Diverged(_)));
        assert!(select_eta(&[], |_| Ok(0.0)).is_err());
    }

    #[test]
    fn select_eta_on_quadratic() {
        // T gradient steps on f(b) = h b²/2 from b = 1 leave f = h (1 - ηh)^{2T}/2,
        // minimized at η = 1/h.
        let h = 3.7;
        let grid = crate::harness::config::default_eta_grid();
        let (eta, _) = select_eta(&grid, |eta| {
            let mut b: f64 = 1.0;
            for _ in 0..5 {
                b -= eta * h * b;
            }
            Ok(0.5 * h * b * b)
        })
        .unwrap();
        let step = 10f64.powf(0.5);
        assert!(eta >= (1.0 / h) / step * 0.999 && eta <= (1.0 / h) * step * 1.001, "{eta}");
    }

    #[test]
    fn epoch_zero_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(Experiment::SyntheticClassification, dir.path());
        c.epochs = 0;
        run(&c).unwrap();
        let s = fs::read_to_string(dir.path().join("records.csv")).unwrap();
        assert_eq!(s, format!("{RECORD_HEADER}\n"));
    }

    #[test]
    fn records_and_determinism() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for exp in [Experiment::SyntheticClassification, Experiment::LeastSquares, Experiment::Mlp] {
            let mut ca = small(exp, a.path());
            ca.optimizers = vec![Variant::Sgd, Variant::AdagradDiag, Variant::AdaFull, Variant::AdaLr, Variant::Radagrad, Variant::RadaVr];
            ca.vr_update_freq = Some(20);
            let mut cb = ca.clone();
            cb.out = b.path().to_path_buf();
            let sa = run(&ca).unwrap();
            run(&cb).unwrap();
            for f in ["records.csv", "aggregate.csv", "spectrum.csv", "summary.txt"] {
                let x = fs::read(a.path().join(f)).unwrap();
                assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{exp} {f}");
            }
            let rec = fs::read_to_string(a.path().join("records.csv")).unwrap();
            let mut lines = rec.lines();
            assert_eq!(lines.next(), Some(RECORD_HEADER));
            let mut last: Option<(String, usize)> = None;
            for l in lines {
                let f: Vec<&str> = l.split(',').collect();
                assert_eq!(f.len(), 8);
                let step: usize = f[4].parse().unwrap();
                if let Some((id, s)) = &last {
                    if id == f[0] {
                        assert!(step > *s);
                    }
                }
                assert!(f[5].parse::<f64>().unwrap().is_finite());
                last = Some((f[0].to_string(), step));
            }
            assert_eq!(sa.optimizers.len(), 6);
            for o in &sa.optimizers {
                assert_eq!(o.trials.len(), 2);
                assert_eq!(o.trials[0].train_loss.len(), 3);
            }
        }
    }

    #[test]
    fn tuning_fills_missing_eta() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(Experiment::SyntheticClassification, dir.path());
        c.eta = None;
        c.eta_by_optimizer.insert(Variant::AdaFull, 0.05);
        c.optimizers = vec![Variant::AdagradDiag, Variant::AdaFull];
        c.eta_grid = vec![0.01, 0.1, 1.0];
        let s = run(&c).unwrap();
        assert!(s.get(Variant::AdagradDiag).unwrap().tuned);
        assert_eq!(s.get(Variant::AdaFull).unwrap().eta, 0.05);
        assert!(dir.path().join("tuning.csv").exists());
    }

    #[test]
    fn divergence_aborts_with_flushed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(Experiment::LeastSquares, dir.path());
        c.optimizers = vec![Variant::Sgd];
        c.eta = Some(1e6);
        c.log_every = 1;
        c.epochs = 50;
        let err = run(&c).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)), "{err}");
        let s = fs::read_to_string(dir.path().join("runs").join("sgd-seed0.csv")).unwrap();
        assert!(s.ends_with('\n'));
        assert!(s.lines().count() > 1);
    }

    #[test]
    fn resolved_config_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(Experiment::SyntheticClassification, dir.path());
        run(&RunConfig { epochs: 0, ..c.clone() }).unwrap();
        let text = fs::read_to_string(dir.path().join("config.resolved")).unwrap();
        let back = super::super::config::parse_config(None, &super::super::config::parse_kv(&text).unwrap()).unwrap();
        assert_eq!(back, RunConfig { epochs: 0, ..c });
    }
}
