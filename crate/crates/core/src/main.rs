use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use radagrad::harness::config::{parse_config, prepare_output, RunConfig};
use radagrad::harness::run::{build_tuning_workload, generate_dataset, tune_eta};
use radagrad::harness::Experiment;

#[derive(Parser)]
#[command(name = "radagrad", version, about = "Low-rank full-matrix AdaGrad experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured optimizer over every seed and write CSVs.
    Run(Common),
    /// Tune step sizes on the validation split and print them.
    Tune(Common),
    /// Per-step timing profiles.
    Timing(Common),
    /// Numerical checks of the trace identities and range-finder bound.
    Checks(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    /// Comma-separated optimizer names.
    #[arg(long, alias = "optimizers")]
    optimizer: Option<String>,
    /// Step size, or `auto` to tune.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    oversample: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epochs: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, alias = "seed")]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    batch_size: Option<String>,
    /// Any other configuration key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self, forced_experiment: Option<Experiment>) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let flags = [
            ("experiment", &self.experiment),
            ("optimizers", &self.optimizer),
            ("eta", &self.eta),
            ("delta", &self.delta),
            ("tau", &self.tau),
            ("oversample", &self.oversample),
            ("epochs", &self.epochs),
            ("seeds", &self.seeds),
            ("out", &self.out),
            ("batch_size", &self.batch_size),
        ];
        if let Some(e) = forced_experiment {
            out.push(("experiment".to_string(), e.to_string()));
        }
        for (k, v) in flags {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects key=value, got {kv:?}"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn resolve(&self, forced_experiment: Option<Experiment>) -> Result<RunConfig> {
        let cfg = parse_config(self.config.as_deref(), &self.overrides(forced_experiment)?)?;
        if let Some(e) = forced_experiment {
            anyhow::ensure!(cfg.experiment == e, "this subcommand runs the {e} experiment, not {}", cfg.experiment);
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(c) => {
            let cfg = c.resolve(None)?;
            radagrad::harness::run(&cfg)?;
            print_summary(&cfg)?;
        }
        Command::Timing(c) => {
            let cfg = c.resolve(Some(Experiment::Timing))?;
            radagrad::harness::run(&cfg)?;
            print_summary(&cfg)?;
        }
        Command::Checks(c) => {
            let cfg = c.resolve(Some(Experiment::AppendixChecks))?;
            radagrad::harness::run(&cfg)?;
            print_summary(&cfg)?;
            let csv = std::fs::read_to_string(cfg.out.join("checks.csv"))?;
            anyhow::ensure!(!csv.lines().skip(1).any(|l| l.contains(",false,")), "some checks failed");
        }
        Command::Tune(c) => {
            let cfg = c.resolve(None)?;
            prepare_output(&cfg.out)?;
            let d = generate_dataset(&cfg)?;
            let work = build_tuning_workload(&cfg, &d)?;
            let mut csv = String::from("optimizer,eta,validation_loss\n");
            for &v in &cfg.optimizers {
                let (eta, table) = tune_eta(&cfg, &work, v, &cfg.eta_grid)?;
                for (e, l) in &table {
                    csv.push_str(&format!("{v},{e},{l}\n"));
                }
                println!("{:<14} eta {eta}", v.name());
            }
            let path = cfg.out.join("tuning.csv");
            std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn print_summary(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out.join("summary.txt");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    print!("{text}");
    Ok(())
}
