use super::{drive, loss, project_to_simplex, Iteration, SolverConfig, SolverKind, SolverTrace};
use crate::error::Result;
use crate::game::{subgradient_raw, Game};

struct RegretDescent {
    current: Vec<Vec<f64>>,
    best: Vec<Vec<f64>>,
    best_loss: f64,
    step0: f64,
}

impl Iteration for RegretDescent {
    fn reported(&self) -> &[Vec<f64>] {
        &self.best
    }

    fn current(&self) -> &[Vec<f64>] {
        &self.current
    }

    fn step(&mut self, game: &Game, t: usize) -> f64 {
        let report = subgradient_raw(game, &self.current);
        let eta = self.step0 / (t as f64).sqrt();
        for (s, g) in self.current.iter_mut().zip(&report.gradient) {
            let moved: Vec<f64> = s.iter().zip(g).map(|(x, d)| x - eta * d).collect();
            *s = project_to_simplex(&moved);
        }
        let now = loss(game, &self.current);
        if now < self.best_loss {
            self.best_loss = now;
            self.best.clone_from(&self.current);
        }
        self.best_loss
    }
}

/// Projected subgradient descent on `NashApr` with step `eta0 / sqrt(t)`.
///
/// Reports the best profile seen so far, so the result is never worse than
/// the starting point.
pub fn regret_descent(game: &Game, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let init = cfg.initial(game)?;
    let initial_loss = loss(game, &init);
    let state = RegretDescent {
        current: init.clone(),
        best: init,
        best_loss: initial_loss,
        step0: cfg.descent_step,
    };
    drive(SolverKind::RegretDescent, game, cfg, initial_loss, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::coordination;
    use crate::game::{nash_apr, StrategyProfile};

    #[test]
    fn coordination_game_from_uniform() {
        let cfg = SolverConfig {
            max_iterations: 1000,
            target_nash_apr: 0.01,
            ..SolverConfig::default()
        };
        let g = coordination();
        let trace = regret_descent(&g, &cfg).unwrap();
        assert!(trace.reached_target, "final {}", trace.final_nash_apr);
        assert!(nash_apr(&trace.final_profile, &g).unwrap() <= 0.01 + 1e-12);
    }

    #[test]
    fn never_leaves_an_exact_equilibrium() {
        let g = coordination();
        let ne = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut state = RegretDescent {
            current: ne.clone(),
            best: ne.clone(),
            best_loss: 0.0,
            step0: 0.1,
        };
        for t in 1..=50 {
            assert_eq!(state.step(&g, t), 0.0);
        }
        assert_eq!(state.best, ne);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let g = crate::solvers::test_games::matching_pennies();
        let cfg = SolverConfig {
            max_iterations: 500,
            warm_start: Some(StrategyProfile::new(vec![vec![0.95, 0.05], vec![0.1, 0.9]]).unwrap()),
            descent_step: 0.5,
            ..SolverConfig::default()
        };
        let trace = regret_descent(&g, &cfg).unwrap();
        for w in trace.loss_curve.windows(2) {
            assert!(w[1].nash_apr <= w[0].nash_apr);
        }
        assert!(trace.final_nash_apr <= trace.initial_nash_apr);
    }
}
