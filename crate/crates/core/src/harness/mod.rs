//! Desk-scale experiment runners and CSV reports.
//!
//! Every runner is deterministic given its config: repetition `r` uses seed
//! `derive_seed(cfg.seed, r)` for both data and training, and rows are written
//! in a fixed order. With `record_timing` off, time columns are written as 0
//! and re-running a config reproduces every report byte-for-byte.

mod bound;
pub mod cli;
mod experiments;
mod selfcheck;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::{ApproximatorArch, TrainConfig};
use crate::error::{Error, Result};
use crate::game::GameShape;
use crate::gen::{GameClass, GeneratorSpec};
use crate::rng;
use crate::solvers::{SolverConfig, SolverKind};

pub use bound::{evaluate_bound, geometric_grid, BoundInputs, BoundReport, RadiusTerm};
pub use experiments::{
    efficiency_race, prepare_model, run_efficiency_race, run_generalization, run_warmstart,
    warmstart, GeneralizationReport, GeneralizationRow, RaceReport, RaceRow, TrainedModel,
    WarmstartReport, WarmstartRow, WarmstartSummary, APPROXIMATOR_ROW,
};
pub use selfcheck::{
    golden_suite, gradient_suite, oracle_suite, selfcheck, selfcheck_with, simplex_suite,
    strategy_lipschitz_suite, utility_lipschitz_suite, NashAprFn, SelfcheckConfig, SelfcheckReport,
    SuiteReport, GOLDEN_TOLERANCE, GRADIENT_TOLERANCE, LIPSCHITZ_SLACK, ORACLE_MAX_JOINT,
    ORACLE_TOLERANCE,
};

/// One game family of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub class: GameClass,
    pub action_counts: Vec<usize>,
    pub count: usize,
    pub validation: usize,
    pub test: usize,
}

impl DatasetConfig {
    /// 4600 games split 4000/400/200.
    pub fn desk(class: GameClass, action_counts: Vec<usize>) -> Self {
        Self {
            class,
            action_counts,
            count: 4600,
            validation: 400,
            test: 200,
        }
    }

    pub fn spec(&self, seed: u64) -> Result<GeneratorSpec> {
        GeneratorSpec::new(
            self.class,
            GameShape::new(self.action_counts.clone())?,
            seed,
        )
    }
}

/// Baseline race against the approximator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaceConfig {
    pub solvers: Vec<SolverKind>,
    /// Iteration cap and solver constants; the target is set per game.
    pub solver: SolverConfig,
    /// Added to the model's per-game loss to form the target.
    pub tolerance: f64,
}

impl Default for RaceConfig {
    fn default() -> Self {
        Self {
            solvers: SolverKind::BASELINES.to_vec(),
            solver: SolverConfig {
                max_iterations: 10_000,
                ..SolverConfig::default()
            },
            tolerance: 0.0,
        }
    }
}

impl RaceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::config("no solvers to race"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("race tolerance must be non-negative"));
        }
        self.solver.validate()
    }
}

/// Regret descent from uniform and from the approximator's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmstartConfig {
    pub target: f64,
    pub step: f64,
    pub max_iterations: usize,
}

impl Default for WarmstartConfig {
    fn default() -> Self {
        Self {
            target: 0.01,
            step: 0.1,
            max_iterations: 10_000,
        }
    }
}

impl WarmstartConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver_config(None).validate()
    }

    pub(crate) fn solver_config(
        &self,
        warm_start: Option<crate::game::StrategyProfile>,
    ) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iterations,
            target_nash_apr: self.target,
            descent_step: self.step,
            warm_start,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    pub hidden_layers: Vec<usize>,
    pub clip_range: (f64, f64),
    pub train: TrainConfig,
    pub race: RaceConfig,
    pub warmstart: WarmstartConfig,
    pub repetitions: usize,
    pub seed: u64,
    /// Reports are written here when set.
    pub output_dir: Option<PathBuf>,
    /// When false every time column is written as 0.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: vec![DatasetConfig::desk(
                GameClass::TravelersDilemma,
                vec![10, 10],
            )],
            hidden_layers: vec![128, 128],
            clip_range: (0.0, 1.0),
            train: TrainConfig::default(),
            race: RaceConfig::default(),
            warmstart: WarmstartConfig::default(),
            repetitions: 1,
            seed: 0,
            output_dir: None,
            record_timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.datasets.is_empty() {
            return Err(Error::config("no datasets configured"));
        }
        for d in &self.datasets {
            d.spec(0)?;
            if d.validation + d.test >= d.count {
                return Err(Error::config(format!(
                    "{}: {} games leave no training split",
                    d.class, d.count
                )));
            }
        }
        self.train.validate()?;
        self.race.validate()?;
        self.warmstart.validate()
    }

    pub fn arch(&self, shape: GameShape) -> ApproximatorArch {
        let mut arch = ApproximatorArch::with_hidden(shape, self.hidden_layers.clone());
        arch.clip_range = self.clip_range;
        arch
    }

    pub fn repetition_seed(&self, repetition: usize) -> u64 {
        rng::derive_seed(self.seed, repetition as u64)
    }
}

pub(crate) fn timed(record: bool, seconds: f64) -> f64 {
    if record {
        seconds
    } else {
        0.0
    }
}

/// Writes `name.csv` and the config echo `name.json` into `dir`.
pub fn write_report<C: Serialize>(dir: &Path, name: &str, csv: &[u8], config: &C) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.csv")), csv)?;
    let mut echo = serde_json::to_vec_pretty(config)?;
    echo.push(b'\n');
    fs::write(dir.join(format!("{name}.json")), echo)?;
    Ok(())
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn config_validation_and_json_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let mut bad = cfg.clone();
        bad.repetitions = 0;
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.datasets[0].count = 600;
        assert!(bad.validate().is_err());
    }
}
