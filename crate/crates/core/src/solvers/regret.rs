use super::{drive, loss, Iteration, SolverConfig, SolverKind, SolverTrace};
use crate::error::Result;
use crate::game::{deviation_gains, Game};

struct RegretMatching {
    regrets: Vec<Vec<f64>>,
    current: Vec<Vec<f64>>,
    sum: Vec<Vec<f64>>,
    average: Vec<Vec<f64>>,
}

impl Iteration for RegretMatching {
    fn reported(&self) -> &[Vec<f64>] {
        &self.average
    }

    fn current(&self) -> &[Vec<f64>] {
        &self.current
    }

    // Several per-player buffers advance in lockstep.
    #[allow(clippy::needless_range_loop)]
    fn step(&mut self, game: &Game, t: usize) -> f64 {
        let gains = deviation_gains(game, &self.current);
        for p in 0..self.current.len() {
            for (r, g) in self.regrets[p].iter_mut().zip(&gains[p]) {
                *r += g;
            }
            for (s, x) in self.sum[p].iter_mut().zip(&self.current[p]) {
                *s += x;
            }
            for (a, s) in self.average[p].iter_mut().zip(&self.sum[p]) {
                *a = s / t as f64;
            }
            let positive: f64 = self.regrets[p].iter().map(|r| r.max(0.0)).sum();
            let k = self.current[p].len();
            for (c, r) in self.current[p].iter_mut().zip(&self.regrets[p]) {
                *c = if positive > 0.0 {
                    r.max(0.0) / positive
                } else {
                    1.0 / k as f64
                };
            }
        }
        loss(game, &self.average)
    }
}

/// Regret matching; the reported profile is the time average of the iterates.
///
/// A warm start only sets the first iterate.
pub fn regret_matching(game: &Game, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let init = cfg.initial(game)?;
    let zeros: Vec<Vec<f64>> = init.iter().map(|s| vec![0.0; s.len()]).collect();
    let initial_loss = loss(game, &init);
    let state = RegretMatching {
        regrets: zeros.clone(),
        current: init.clone(),
        sum: zeros,
        average: init,
    };
    drive(SolverKind::RegretMatching, game, cfg, initial_loss, state)
}
