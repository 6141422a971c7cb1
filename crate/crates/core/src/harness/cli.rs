//! Command-line front end. The `nashapr` binary only parses arguments and
//! calls [`run`].

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::{
    efficiency_race, evaluate_bound, selfcheck, warmstart, write_report, BoundInputs, RaceConfig,
    RaceReport, SelfcheckConfig, TrainedModel, WarmstartConfig, WarmstartReport,
};
use crate::approx::{
    evaluate, load_model, save_model, ApproximatorArch, TrainConfig, TrainLog, Trainer,
};
use crate::error::{Error, Result};
use crate::game::GameShape;
use crate::gen::{
    export_json, generate, load_dataset, save_dataset, Dataset, GameClass, GeneratorSpec, SplitKind,
};
use crate::solvers::{SolverConfig, SolverKind};

#[derive(Debug, Parser)]
#[command(
    name = "nashapr",
    version,
    about = "Nash approximation loss experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of games.
    Gen(GenArgs),
    /// Train an approximator on a dataset.
    Train(TrainArgs),
    /// Mean and std of NashApr on one split.
    Eval(EvalArgs),
    /// Race baseline solvers against a trained model.
    Race(RaceArgs),
    /// Regret descent from uniform vs. from the model's output.
    Warmstart(WarmstartArgs),
    /// Evaluate the covering-number generalization bound.
    Bound(BoundArgs),
    /// Run the property suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = 2)]
    pub players: usize,
    #[arg(long, default_value_t = 10)]
    pub actions: usize,
    #[arg(long, default_value_t = 4600)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Validation games carved before the test tail; default is 10% of count.
    #[arg(long)]
    pub validation: Option<usize>,
    /// Test games at the end; default is 10% of count, at most 200.
    #[arg(long)]
    pub test: Option<usize>,
    /// Dataset file; a `.json` extension writes the JSON export instead.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "128,128")]
    pub arch: String,
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub val_every: usize,
    /// Continue from this model file (it must hold optimizer state).
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Model file; the training log goes to `<out>.log.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args, Serialize)]
pub struct RaceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "fp,rm,rd")]
    pub solvers: String,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Added to the model's per-game NashApr to form each target.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Report directory; without it the CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write time columns as 0 for byte-identical reruns.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct WarmstartArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub target: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    #[arg(long, default_value_t = 2)]
    pub players: usize,
    #[arg(long, default_value_t = 2)]
    pub actions: usize,
    /// Radii, comma separated.
    #[arg(long, default_value = "0.01,0.05,0.1,0.25,0.5")]
    pub r_grid: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1_000)]
    pub oracle_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::config(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

/// Writes `csv` to `dir/name.csv` with a config echo, or to stdout.
fn emit<C: Serialize>(dir: Option<&Path>, name: &str, csv: &[u8], config: &C) -> Result<()> {
    match dir {
        Some(d) => write_report(d, name, csv, config),
        None => Ok(io::stdout().write_all(csv)?),
    }
}

fn load_trained(model: &Path, data: &Path) -> Result<TrainedModel> {
    let file = load_model(model)?;
    let dataset = load_dataset(data)?;
    if dataset.spec.shape != file.arch.shape {
        return Err(Error::dim("model and dataset shapes differ"));
    }
    Ok(TrainedModel {
        label: dataset.spec.class.to_string(),
        repetition: 0,
        steps: file.adam.as_ref().map_or(0, |a| a.step as usize),
        arch: file.arch,
        params: file.params,
        dataset,
        log: TrainLog::default(),
    })
}

fn gen(args: &GenArgs) -> Result<()> {
    let class: GameClass = args.class.parse()?;
    let spec = GeneratorSpec::new(
        class,
        GameShape::symmetric(args.players, args.actions)?,
        args.seed,
    )?;
    let mut dataset = generate(&spec, args.count)?;
    if args.validation.is_some() || args.test.is_some() {
        let validation = args.validation.unwrap_or(dataset.split.validation.len());
        let test = args.test.unwrap_or(dataset.split.test.len());
        dataset = dataset.with_tail_split(validation, test)?;
    }
    if args.out.extension().is_some_and(|e| e == "json") {
        export_json(&dataset, &args.out)?;
    } else {
        save_dataset(&dataset, &args.out)?;
    }
    eprintln!(
        "wrote {} {} games ({}/{}/{}) to {}",
        dataset.games.len(),
        class,
        dataset.split.train.len(),
        dataset.split.validation.len(),
        dataset.split.test.len(),
        args.out.display()
    );
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let dataset: Dataset = load_dataset(&args.data)?;
    let cfg = TrainConfig {
        iterations: args.iters,
        batch_size: args.batch,
        learning_rate: args.lr,
        seed: args.seed,
        validation_interval: args.val_every,
    };
    let arch =
        ApproximatorArch::with_hidden(dataset.spec.shape.clone(), parse_list(&args.arch, "width")?);
    let mut trainer = match &args.resume {
        None => Trainer::new(arch, &dataset, cfg)?,
        Some(path) => {
            let file = load_model(path)?;
            file.expect_arch(&arch)?;
            let adam = file.adam.ok_or_else(|| {
                Error::Usage("model file has no optimizer state to resume from".into())
            })?;
            Trainer::resume(arch, &dataset, cfg, file.params, adam)?
        }
    };
    trainer.run()?;
    save_model(
        &trainer.arch,
        &trainer.params,
        Some(&trainer.adam),
        &args.out,
    )?;
    let mut log = Vec::new();
    trainer.log.write_csv(&mut log)?;
    let log_path = PathBuf::from(format!("{}.log.csv", args.out.display()));
    fs::write(&log_path, log)?;
    if let Some(last) = trainer.log.rows.last() {
        eprintln!("step {} train loss {:.6}", last.step, last.train_loss);
    }
    eprintln!("wrote {} and {}", args.out.display(), log_path.display());
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let split: SplitKind = args.split.parse()?;
    let model = load_trained(&args.model, &args.data)?;
    let games = model.dataset.split_games(split);
    let (mean, std) = evaluate(&model.arch, &model.params, &games)?;
    println!("split,games,mean,std");
    println!("{split},{},{mean},{std}", games.len());
    Ok(())
}

fn race(args: &RaceArgs) -> Result<()> {
    let model = load_trained(&args.model, &args.data)?;
    let cfg = RaceConfig {
        solvers: parse_list::<SolverKind>(&args.solvers, "solver")?,
        solver: SolverConfig {
            max_iterations: args.max_iters,
            ..SolverConfig::default()
        },
        tolerance: args.tol,
    };
    let report = RaceReport {
        rows: efficiency_race(&model, &cfg, !args.no_timing)?,
    };
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    emit(args.out.as_deref(), "race", &csv, args)
}

fn warm(args: &WarmstartArgs) -> Result<()> {
    let model = load_trained(&args.model, &args.data)?;
    let cfg = WarmstartConfig {
        target: args.target,
        step: args.eta0,
        max_iterations: args.max_iters,
    };
    let report = WarmstartReport::from_rows(warmstart(&model, &cfg, !args.no_timing)?);
    let mut rows = Vec::new();
    report.write_csv(&mut rows)?;
    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary)?;
    emit(args.out.as_deref(), "warmstart", &rows, args)?;
    emit(args.out.as_deref(), "warmstart_summary", &summary, args)
}

fn bound(args: &BoundArgs) -> Result<()> {
    let inputs = BoundInputs {
        m: args.m,
        delta: args.delta,
        lipschitz: args.lipschitz,
        shape: GameShape::symmetric(args.players, args.actions)?,
        r_grid: parse_list(&args.r_grid, "radius")?,
    };
    let report = evaluate_bound(&inputs)?;
    println!("r,log_ln_covering,delta_m,overflow");
    for t in &report.terms {
        println!("{},{},{},{}", t.r, t.log_ln_covering, t.delta_m, t.overflow);
    }
    println!(
        "# best_r={} delta_m={} confidence={} bound={} overflow={}",
        report.best_r, report.delta_m, report.confidence, report.bound, report.overflow
    );
    Ok(())
}

fn check(args: &SelfcheckArgs) -> Result<bool> {
    let report = selfcheck(&SelfcheckConfig {
        lipschitz_samples: args.samples,
        oracle_samples: args.oracle_samples,
        seed: args.seed,
        ..SelfcheckConfig::default()
    });
    report.write_text(io::stdout())?;
    Ok(report.passed())
}

/// Runs one subcommand. Exit code 1 means a failed self-check, 2 an error.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Train(a) => train(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::Race(a) => race(a).map(|_| true),
        Command::Warmstart(a) => warm(a).map(|_| true),
        Command::Bound(a) => bound(a).map(|_| true),
        Command::Selfcheck(a) => check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
