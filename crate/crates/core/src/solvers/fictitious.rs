use super::{drive, loss, Iteration, SolverConfig, SolverKind, SolverTrace};
use crate::error::Result;
use crate::game::{argmax, deviation_payoffs_raw, Game};

struct FictitiousPlay {
    counts: Vec<Vec<f64>>,
    average: Vec<Vec<f64>>,
    last: Vec<Vec<f64>>,
}

impl Iteration for FictitiousPlay {
    fn reported(&self) -> &[Vec<f64>] {
        &self.average
    }

    fn current(&self) -> &[Vec<f64>] {
        &self.last
    }

    fn step(&mut self, game: &Game, _t: usize) -> f64 {
        // Simultaneous: all best responses are against the same averages.
        let responses: Vec<usize> = (0..self.counts.len())
            .map(|p| argmax(&deviation_payoffs_raw(game, p, &self.average)))
            .collect();
        for (p, &a) in responses.iter().enumerate() {
            self.counts[p][a] += 1.0;
            self.last[p].iter_mut().for_each(|x| *x = 0.0);
            self.last[p][a] = 1.0;
            let total: f64 = self.counts[p].iter().sum();
            for (avg, c) in self.average[p].iter_mut().zip(&self.counts[p]) {
                *avg = c / total;
            }
        }
        loss(game, &self.average)
    }
}

/// Fictitious play with simultaneous best responses.
///
/// Action counts start at `fp_prior_weight * sigma_init`; the reported profile
/// is the empirical average and `last_iterate` holds the latest (pure) best
/// responses.
pub fn fictitious_play(game: &Game, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let init = cfg.initial(game)?;
    let counts: Vec<Vec<f64>> = init
        .iter()
        .map(|s| s.iter().map(|x| x * cfg.fp_prior_weight).collect())
        .collect();
    let initial_loss = loss(game, &init);
    let state = FictitiousPlay {
        counts,
        average: init.clone(),
        last: init,
    };
    drive(SolverKind::FictitiousPlay, game, cfg, initial_loss, state)
}
