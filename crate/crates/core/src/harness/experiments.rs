use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    median, timed, write_report, DatasetConfig, ExperimentConfig, RaceConfig, WarmstartConfig,
};
use crate::approx::{
    evaluate, forward, ApproximatorArch, ApproximatorParams, Mode, TrainConfig, TrainLog, Trainer,
};
use crate::error::{Error, Result};
use crate::game::{nash_apr, Game, StrategyProfile};
use crate::gen::{generate, Dataset, SplitKind};
use crate::parallel;
use crate::rng;
use crate::solvers::{random_profile, regret_descent, SolverConfig};

/// Solver label of the approximator's row in race reports.
pub const APPROXIMATOR_ROW: &str = "nea";

const RANDOM_STREAM: u64 = 7;
const EVAL_CHUNK: usize = 256;

/// A trained approximator together with the data it was trained on.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    /// Class name used in report rows.
    pub label: String,
    pub repetition: usize,
    pub arch: ApproximatorArch,
    pub params: ApproximatorParams,
    pub dataset: Dataset,
    pub log: TrainLog,
    /// Optimizer steps taken; 0 means untrained.
    pub steps: usize,
}

impl TrainedModel {
    fn ensure_trained(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Usage(format!(
                "model for {} has not been trained",
                self.label
            )));
        }
        if self.dataset.split.test.is_empty() {
            return Err(Error::config(format!(
                "{}: test split is empty",
                self.label
            )));
        }
        Ok(())
    }

    /// Eval-mode outputs for the test split, in split order.
    pub fn predict_test(&self) -> Result<Vec<StrategyProfile>> {
        let games = self.dataset.split_games(SplitKind::Test);
        let mut out = Vec::with_capacity(games.len());
        for chunk in games.chunks(EVAL_CHUNK) {
            out.extend(forward(&self.arch, &self.params, chunk, Mode::Eval)?.0);
        }
        Ok(out)
    }
}

/// Generates the repetition's dataset and trains a model on it.
pub fn prepare_model(
    cfg: &ExperimentConfig,
    data: &DatasetConfig,
    repetition: usize,
) -> Result<TrainedModel> {
    let seed = cfg.repetition_seed(repetition);
    let spec = data.spec(seed)?;
    let dataset = generate(&spec, data.count)?.with_tail_split(data.validation, data.test)?;
    let arch = cfg.arch(spec.shape.clone());
    let train_cfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let (params, adam, log) = {
        let mut trainer = Trainer::new(arch.clone(), &dataset, train_cfg)?;
        trainer.run()?;
        (trainer.params, trainer.adam, trainer.log)
    };
    Ok(TrainedModel {
        label: data.class.to_string(),
        repetition,
        arch,
        params,
        dataset,
        log,
        steps: adam.step as usize,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRow {
    pub class: String,
    pub repetition: usize,
    /// `train`, `test` or `random` (random profiles on the test split).
    pub split: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub rows: Vec<GeneralizationRow>,
}

impl GeneralizationReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "class,repetition,split,mean,std")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.class, r.repetition, r.split, r.mean, r.std
            )?;
        }
        Ok(())
    }

    /// Mean over repetitions of the per-repetition means.
    pub fn average(&self, class: &str, split: &str) -> Option<f64> {
        let means: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.class == class && r.split == split)
            .map(|r| r.mean)
            .collect();
        (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
    }
}

fn random_baseline(games: &[&Game], seed: u64) -> Result<(f64, f64)> {
    let seed = rng::derive_seed(seed, RANDOM_STREAM);
    let losses = parallel::map_indexed(games.len(), |i| {
        nash_apr(
            &random_profile(games[i].shape(), &mut rng::stream(seed, i as u64)),
            games[i],
        )
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(crate::approx::mean_std(&losses))
}

/// Trains one model per class and repetition and compares train, test and
/// random-profile losses. Returns the report and the trained models.
pub fn run_generalization(
    cfg: &ExperimentConfig,
) -> Result<(GeneralizationReport, Vec<TrainedModel>)> {
    cfg.validate()?;
    let mut report = GeneralizationReport::default();
    let mut models = Vec::new();
    for data in &cfg.datasets {
        for repetition in 0..cfg.repetitions {
            let model = prepare_model(cfg, data, repetition)?;
            let train = model.dataset.split_games(SplitKind::Train);
            let test = model.dataset.split_games(SplitKind::Test);
            if test.is_empty() {
                return Err(Error::config(format!(
                    "{}: test split is empty",
                    data.class
                )));
            }
            let stats = [
                ("train", evaluate(&model.arch, &model.params, &train)?),
                ("test", evaluate(&model.arch, &model.params, &test)?),
                (
                    "random",
                    random_baseline(&test, cfg.repetition_seed(repetition))?,
                ),
            ];
            for (split, (mean, std)) in stats {
                report.rows.push(GeneralizationRow {
                    class: model.label.clone(),
                    repetition,
                    split: split.to_string(),
                    mean,
                    std,
                });
            }
            models.push(model);
        }
    }
    if let Some(dir) = &cfg.output_dir {
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        write_report(dir, "generalization", &csv, cfg)?;
    }
    Ok((report, models))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaceRow {
    pub solver: String,
    pub class: String,
    pub games: usize,
    /// Seconds per game; for the approximator, one eval pass over the test
    /// split divided by its size.
    pub mean_time_s: f64,
    pub mean_iterations: f64,
    /// Games where the solver hit the iteration cap above its target.
    pub failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RaceReport {
    pub rows: Vec<RaceRow>,
}

impl RaceReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "solver,class,mean_time_s,mean_iterations,failures")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.solver, r.class, r.mean_time_s, r.mean_iterations, r.failures
            )?;
        }
        Ok(())
    }

    pub fn row(&self, solver: &str, class: &str) -> Option<&RaceRow> {
        self.rows
            .iter()
            .find(|r| r.solver == solver && r.class == class)
    }
}

/// Per-game race: every solver chases the model's own `NashApr` on that game
/// (plus `cfg.tolerance`).
pub fn efficiency_race(
    model: &TrainedModel,
    cfg: &RaceConfig,
    record_timing: bool,
) -> Result<Vec<RaceRow>> {
    model.ensure_trained()?;
    cfg.validate()?;
    let games = model.dataset.split_games(SplitKind::Test);
    let start = Instant::now();
    let outputs = model.predict_test()?;
    let model_time = start.elapsed().as_secs_f64() / games.len() as f64;
    let targets = games
        .iter()
        .zip(&outputs)
        .map(|(g, p)| nash_apr(p, g).map(|l| l + cfg.tolerance))
        .collect::<Result<Vec<f64>>>()?;

    // (iterations, seconds, reached) per game, per solver.
    let results = parallel::map_indexed(games.len(), |i| {
        cfg.solvers
            .iter()
            .map(|kind| {
                let solver_cfg = SolverConfig {
                    target_nash_apr: targets[i],
                    record_every: cfg.solver.max_iterations,
                    warm_start: None,
                    ..cfg.solver.clone()
                };
                kind.run(games[i], &solver_cfg)
                    .map(|t| (t.iterations_used, t.wall_time, t.reached_target))
            })
            .collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n = games.len() as f64;
    let mut rows = vec![RaceRow {
        solver: APPROXIMATOR_ROW.to_string(),
        class: model.label.clone(),
        games: games.len(),
        mean_time_s: timed(record_timing, model_time),
        mean_iterations: 1.0,
        failures: 0,
    }];
    for (s, kind) in cfg.solvers.iter().enumerate() {
        let iterations: f64 = results.iter().map(|r| r[s].0 as f64).sum();
        let seconds: f64 = results.iter().map(|r| r[s].1).sum();
        rows.push(RaceRow {
            solver: kind.short_name().to_string(),
            class: model.label.clone(),
            games: games.len(),
            mean_time_s: timed(record_timing, seconds / n),
            mean_iterations: iterations / n,
            failures: results.iter().filter(|r| !r[s].2).count(),
        });
    }
    Ok(rows)
}

/// Races every model; rows for models of the same class are pooled.
pub fn run_efficiency_race(cfg: &ExperimentConfig, models: &[TrainedModel]) -> Result<RaceReport> {
    if models.is_empty() {
        return Err(Error::Usage(
            "the race needs at least one trained model".into(),
        ));
    }
    let mut report = RaceReport::default();
    for model in models {
        for row in efficiency_race(model, &cfg.race, cfg.record_timing)? {
            match report
                .rows
                .iter_mut()
                .find(|r| r.solver == row.solver && r.class == row.class)
            {
                Some(acc) => {
                    let total = (acc.games + row.games) as f64;
                    acc.mean_time_s = (acc.mean_time_s * acc.games as f64
                        + row.mean_time_s * row.games as f64)
                        / total;
                    acc.mean_iterations = (acc.mean_iterations * acc.games as f64
                        + row.mean_iterations * row.games as f64)
                        / total;
                    acc.failures += row.failures;
                    acc.games += row.games;
                }
                None => report.rows.push(row),
            }
        }
    }
    if let Some(dir) = &cfg.output_dir {
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        write_report(dir, "race", &csv, cfg)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmstartRow {
    pub class: String,
    pub repetition: usize,
    /// Dataset index of the game.
    pub game: usize,
    /// `uniform` or `approximator`.
    pub init_kind: String,
    pub iterations: usize,
    pub time_s: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub reached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmstartSummary {
    pub class: String,
    pub init_kind: String,
    pub games: usize,
    pub median_iterations: f64,
    pub median_time_s: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WarmstartReport {
    pub rows: Vec<WarmstartRow>,
    pub summary: Vec<WarmstartSummary>,
}

impl WarmstartReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "class,repetition,game,init_kind,iterations,time_s,initial_loss,final_loss"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.class,
                r.repetition,
                r.game,
                r.init_kind,
                r.iterations,
                r.time_s,
                r.initial_loss,
                r.final_loss
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "class,init_kind,games,median_iterations,median_time_s,failures"
        )?;
        for s in &self.summary {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.class, s.init_kind, s.games, s.median_iterations, s.median_time_s, s.failures
            )?;
        }
        Ok(())
    }

    pub fn summary_for(&self, class: &str, init_kind: &str) -> Option<&WarmstartSummary> {
        self.summary
            .iter()
            .find(|s| s.class == class && s.init_kind == init_kind)
    }

    fn summarize(&mut self) {
        self.summary.clear();
        for row in &self.rows {
            if self
                .summary
                .iter()
                .any(|s| s.class == row.class && s.init_kind == row.init_kind)
            {
                continue;
            }
            let group: Vec<&WarmstartRow> = self
                .rows
                .iter()
                .filter(|r| r.class == row.class && r.init_kind == row.init_kind)
                .collect();
            self.summary.push(WarmstartSummary {
                class: row.class.clone(),
                init_kind: row.init_kind.clone(),
                games: group.len(),
                median_iterations: median(
                    &mut group
                        .iter()
                        .map(|r| r.iterations as f64)
                        .collect::<Vec<_>>(),
                ),
                median_time_s: median(&mut group.iter().map(|r| r.time_s).collect::<Vec<_>>()),
                failures: group.iter().filter(|r| !r.reached).count(),
            });
        }
    }
}

/// Regret descent on every test game, once from uniform and once from the
/// model's output. Two rows per game, uniform first.
pub fn warmstart(
    model: &TrainedModel,
    cfg: &WarmstartConfig,
    record_timing: bool,
) -> Result<Vec<WarmstartRow>> {
    model.ensure_trained()?;
    cfg.validate()?;
    let indices = model.dataset.indices(SplitKind::Test);
    let outputs = model.predict_test()?;
    let per_game = parallel::map_indexed(indices.len(), |i| {
        let game = &model.dataset.games[indices[i]];
        [
            ("uniform", None),
            ("approximator", Some(outputs[i].clone())),
        ]
        .into_iter()
        .map(|(kind, init)| {
            let trace = regret_descent(game, &cfg.solver_config(init))?;
            Ok(WarmstartRow {
                class: model.label.clone(),
                repetition: model.repetition,
                game: indices[i],
                init_kind: kind.to_string(),
                iterations: trace.iterations_used,
                time_s: timed(record_timing, trace.wall_time),
                initial_loss: trace.initial_nash_apr,
                final_loss: trace.final_nash_apr,
                reached: trace.reached_target,
            })
        })
        .collect::<Result<Vec<_>>>()
    });
    let mut rows = Vec::with_capacity(2 * indices.len());
    for pair in per_game {
        rows.extend(pair?);
    }
    Ok(rows)
}

pub fn run_warmstart(cfg: &ExperimentConfig, models: &[TrainedModel]) -> Result<WarmstartReport> {
    if models.is_empty() {
        return Err(Error::Usage(
            "warm-starting needs at least one trained model".into(),
        ));
    }
    let mut report = WarmstartReport::default();
    for model in models {
        report
            .rows
            .extend(warmstart(model, &cfg.warmstart, cfg.record_timing)?);
    }
    report.summarize();
    if let Some(dir) = &cfg.output_dir {
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        write_report(dir, "warmstart", &csv, cfg)?;
        let mut csv = Vec::new();
        report.write_summary_csv(&mut csv)?;
        write_report(dir, "warmstart_summary", &csv, cfg)?;
    }
    Ok(report)
}

impl WarmstartReport {
    /// Rebuilds the medians from `rows`.
    pub fn from_rows(rows: Vec<WarmstartRow>) -> Self {
        let mut report = Self {
            rows,
            summary: Vec::new(),
        };
        report.summarize();
        report
    }
}
