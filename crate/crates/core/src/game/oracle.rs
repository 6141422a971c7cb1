use super::{Game, StrategyProfile};
use crate::error::{Error, Result};

/// Largest joint-action count the enumeration oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 1_000_000;

/// `NashApr` by explicit enumeration of every joint action.
///
/// Shares no code with the contraction kernels; every expectation is a plain
/// sum of probability-weighted outcomes.
pub fn brute_force_nash_apr(profile: &StrategyProfile, game: &Game) -> Result<f64> {
    let shape = game.shape();
    profile.check_shape(shape)?;
    let joint = shape.joint_count();
    if joint > BRUTE_FORCE_LIMIT {
        return Err(Error::Size(format!(
            "{joint} joint actions exceed the enumeration limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let profile = profile.repaired();
    let n = shape.num_players();

    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let mut deviation = vec![0.0; shape.num_actions(i)];
        let mut expected = 0.0;
        for idx in 0..joint {
            let actions = shape.joint_actions(idx);
            let others: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| profile.player(j)[actions[j]])
                .product();
            let u = game.utility(i, &actions);
            deviation[actions[i]] += others * u;
            expected += profile.player(i)[actions[i]] * others * u;
        }
        for d in deviation {
            worst = worst.max(d - expected);
        }
    }
    Ok(worst)
}
