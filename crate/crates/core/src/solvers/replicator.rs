use super::{drive, loss, normalize, Iteration, SolverConfig, SolverKind, SolverTrace};
use crate::error::Result;
use crate::game::{deviation_payoffs_raw, Game};

struct Replicator {
    current: Vec<Vec<f64>>,
    shift: f64,
}

impl Iteration for Replicator {
    fn reported(&self) -> &[Vec<f64>] {
        &self.current
    }

    fn current(&self) -> &[Vec<f64>] {
        &self.current
    }

    fn step(&mut self, game: &Game, _t: usize) -> f64 {
        let fitness: Vec<Vec<f64>> = (0..self.current.len())
            .map(|p| deviation_payoffs_raw(game, p, &self.current))
            .collect();
        for (s, f) in self.current.iter_mut().zip(&fitness) {
            let mean: f64 = s.iter().zip(f).map(|(x, y)| x * y).sum();
            for (x, y) in s.iter_mut().zip(f) {
                *x *= (y + self.shift) / (mean + self.shift);
            }
            normalize(s);
        }
        loss(game, &self.current)
    }
}

/// Discrete-time replicator dynamics; reports the current iterate.
pub fn replicator_dynamics(game: &Game, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let init = cfg.initial(game)?;
    let initial_loss = loss(game, &init);
    let state = Replicator {
        current: init,
        shift: cfg.rd_shift,
    };
    drive(
        SolverKind::ReplicatorDynamics,
        game,
        cfg,
        initial_loss,
        state,
    )
}
