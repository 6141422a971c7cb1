//! Classical iterative solvers, all reporting `NashApr` traces.
//!
//! Every solver shares the same driver: the reported profile is evaluated
//! before the first iteration (iteration 0) and after every iteration, the run
//! stops as soon as the reported `NashApr` is at or below the target, and wall
//! time covers the iteration loop only.

mod descent;
mod fictitious;
mod regret;
mod replicator;
mod simplex;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{loss_of_vectors, Game, GameShape, StrategyProfile};

pub use descent::regret_descent;
pub use fictitious::fictitious_play;
pub use regret::regret_matching;
pub use replicator::replicator_dynamics;
pub use simplex::project_to_simplex;

/// Solver settings. Solver-specific fields are ignored by the other solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once the reported profile's `NashApr` is at or below this.
    pub target_nash_apr: f64,
    pub record_every: usize,
    pub warm_start: Option<StrategyProfile>,
    /// Fictitious play: pseudo-count weight of the initial strategy.
    pub fp_prior_weight: f64,
    /// Replicator dynamics: payoff shift keeping the update denominator positive.
    pub rd_shift: f64,
    /// Regret descent: base step size, decayed as `eta0 / sqrt(t)`.
    pub descent_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            target_nash_apr: 0.0,
            record_every: 1,
            warm_start: None,
            fp_prior_weight: 1.0,
            rd_shift: 1e-3,
            descent_step: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        if !(self.target_nash_apr >= 0.0) {
            return Err(Error::config("target_nash_apr must be non-negative"));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if !(self.fp_prior_weight > 0.0) || !(self.rd_shift > 0.0) || !(self.descent_step > 0.0) {
            return Err(Error::config("solver parameters must be positive"));
        }
        Ok(())
    }

    fn initial(&self, game: &Game) -> Result<Vec<Vec<f64>>> {
        match &self.warm_start {
            Some(p) => {
                p.check_shape(game.shape())?;
                Ok(p.repaired().into_owned().into_strategies())
            }
            None => Ok(game.shape().uniform_profile().into_strategies()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    FictitiousPlay,
    RegretMatching,
    ReplicatorDynamics,
    RegretDescent,
}

impl SolverKind {
    /// The three baselines raced against the approximator.
    pub const BASELINES: [SolverKind; 3] = [
        SolverKind::FictitiousPlay,
        SolverKind::RegretMatching,
        SolverKind::ReplicatorDynamics,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            SolverKind::FictitiousPlay => "fp",
            SolverKind::RegretMatching => "rm",
            SolverKind::ReplicatorDynamics => "rd",
            SolverKind::RegretDescent => "descent",
        }
    }

    pub fn run(self, game: &Game, cfg: &SolverConfig) -> Result<SolverTrace> {
        match self {
            SolverKind::FictitiousPlay => fictitious_play(game, cfg),
            SolverKind::RegretMatching => regret_matching(game, cfg),
            SolverKind::ReplicatorDynamics => replicator_dynamics(game, cfg),
            SolverKind::RegretDescent => regret_descent(game, cfg),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.short_name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp" | "fictitious_play" => Ok(SolverKind::FictitiousPlay),
            "rm" | "regret_matching" => Ok(SolverKind::RegretMatching),
            "rd" | "replicator_dynamics" => Ok(SolverKind::ReplicatorDynamics),
            "descent" | "regret_descent" => Ok(SolverKind::RegretDescent),
            other => Err(Error::config(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub nash_apr: f64,
    /// Seconds since the loop started.
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub solver: SolverKind,
    pub iterations_used: usize,
    /// Seconds spent in the iteration loop.
    pub wall_time: f64,
    pub loss_curve: Vec<TracePoint>,
    /// Averaged profile for FP/RM, current iterate for RD, best-so-far for descent.
    pub final_profile: StrategyProfile,
    pub last_iterate: StrategyProfile,
    pub reached_target: bool,
    pub initial_nash_apr: f64,
    pub final_nash_apr: f64,
}

/// One iterative method plugged into [`drive`].
pub(crate) trait Iteration {
    /// The profile reported after the latest step.
    fn reported(&self) -> &[Vec<f64>];
    fn current(&self) -> &[Vec<f64>];
    /// Advances to iteration `t` (1-based) and returns the reported `NashApr`.
    fn step(&mut self, game: &Game, t: usize) -> f64;
}

pub(crate) fn drive(
    kind: SolverKind,
    game: &Game,
    cfg: &SolverConfig,
    initial_loss: f64,
    mut method: impl Iteration,
) -> Result<SolverTrace> {
    cfg.validate()?;
    let start = Instant::now();
    let initial_loss = initial_loss.max(0.0);
    let mut loss = initial_loss;
    let mut curve = vec![TracePoint {
        iteration: 0,
        nash_apr: loss,
        elapsed: 0.0,
    }];
    let mut t = 0;
    let mut reached = loss <= cfg.target_nash_apr;
    while !reached && t < cfg.max_iterations {
        t += 1;
        loss = method.step(game, t).max(0.0);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "{kind}: NashApr became {loss} at iteration {t}"
            )));
        }
        reached = loss <= cfg.target_nash_apr;
        if reached || t % cfg.record_every == 0 || t == cfg.max_iterations {
            curve.push(TracePoint {
                iteration: t,
                nash_apr: loss,
                elapsed: start.elapsed().as_secs_f64(),
            });
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    Ok(SolverTrace {
        solver: kind,
        iterations_used: t,
        wall_time,
        loss_curve: curve,
        final_profile: StrategyProfile::from_vecs_unchecked(method.reported().to_vec()),
        last_iterate: StrategyProfile::from_vecs_unchecked(method.current().to_vec()),
        reached_target: reached,
        initial_nash_apr: initial_loss,
        final_nash_apr: loss,
    })
}

/// `NashApr` of solver-internal vectors that are on the simplex by construction.
pub(crate) fn loss(game: &Game, strategies: &[Vec<f64>]) -> f64 {
    loss_of_vectors(game, strategies)
}

pub(crate) fn normalize(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        v.iter_mut().for_each(|x| *x /= sum);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// A profile with each player's strategy uniform on the simplex.
pub fn random_profile<R: Rng + ?Sized>(shape: &GameShape, rng: &mut R) -> StrategyProfile {
    let strategies = shape
        .action_counts()
        .iter()
        .map(|&k| {
            // 1 - U lies in (0, 1], so the logarithm is finite.
            let mut v: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            normalize(&mut v);
            v
        })
        .collect();
    StrategyProfile::from_vecs_unchecked(strategies)
}

/// Writes `solver,game_index,iteration,nash_apr,wall_time_s` rows.
///
/// With `timing` off the time column is written as 0 so reports are
/// reproducible byte-for-byte.
pub fn write_traces_csv<'a, W: Write>(
    mut out: W,
    traces: impl IntoIterator<Item = (usize, &'a SolverTrace)>,
    timing: bool,
) -> Result<()> {
    writeln!(out, "solver,game_index,iteration,nash_apr,wall_time_s")?;
    for (game_index, trace) in traces {
        for p in &trace.loss_curve {
            let time = if timing { p.elapsed } else { 0.0 };
            writeln!(
                out,
                "{},{},{},{},{}",
                trace.solver, game_index, p.iteration, p.nash_apr, time
            )?;
        }
    }
    Ok(())
}
