use super::tensor::{contract_all_but, slice_axis};
use super::{Game, StrategyProfile};
use crate::error::{Error, Result};

/// Two deviation gains closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A subgradient of `NashApr` at a profile, plus the maximizer it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgradientReport {
    /// `d NashApr / d sigma_j(a_j)`, one vector per player.
    pub gradient: Vec<Vec<f64>>,
    pub argmax_player: usize,
    pub argmax_action: usize,
    /// More than one `(player, action)` attains the maximum gain.
    pub tie_flag: bool,
    /// `NashApr` at the profile.
    pub value: f64,
}

fn check_player(game: &Game, player: usize) -> Result<()> {
    if player < game.shape().num_players() {
        Ok(())
    } else {
        Err(Error::dim(format!(
            "player {player} out of range for a {}-player game",
            game.shape().num_players()
        )))
    }
}

fn check_vectors<S: AsRef<[f64]>>(strategies: &[S], game: &Game) -> Result<()> {
    let counts = game.shape().action_counts();
    if strategies.len() != counts.len()
        || strategies
            .iter()
            .zip(counts)
            .any(|(s, &k)| s.as_ref().len() != k)
    {
        return Err(Error::dim("strategy vectors do not match the game shape"));
    }
    Ok(())
}

/// `u_i(a_i, sigma_{-i})` for each `a_i`, without shape checks.
pub(crate) fn deviation_payoffs_raw<S: AsRef<[f64]>>(
    game: &Game,
    player: usize,
    strategies: &[S],
) -> Vec<f64> {
    contract_all_but(
        game.player_tensor(player),
        game.shape().action_counts(),
        strategies,
        player,
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-player gains `u_i(a_i, sigma_{-i}) - u_i(sigma)`.
pub(crate) fn deviation_gains<S: AsRef<[f64]>>(game: &Game, strategies: &[S]) -> Vec<Vec<f64>> {
    (0..game.shape().num_players())
        .map(|p| {
            let mut dev = deviation_payoffs_raw(game, p, strategies);
            let eu = dot(&dev, strategies[p].as_ref());
            dev.iter_mut().for_each(|d| *d -= eu);
            dev
        })
        .collect()
}

/// `NashApr` of vectors already on the simplex; no checks or repair.
pub(crate) fn loss_of_vectors<S: AsRef<[f64]>>(game: &Game, strategies: &[S]) -> f64 {
    max_gain(&deviation_gains(game, strategies))
}

fn max_gain(gains: &[Vec<f64>]) -> f64 {
    gains
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Expected utility of `player` under `profile`.
pub fn expected_utility(game: &Game, player: usize, profile: &StrategyProfile) -> Result<f64> {
    check_player(game, player)?;
    profile.check_shape(game.shape())?;
    let dev = deviation_payoffs_raw(game, player, profile.strategies());
    Ok(dot(&dev, profile.player(player)))
}

/// `u_i(a_i, sigma_{-i})` for every action `a_i` of `player`.
pub fn deviation_payoffs(
    game: &Game,
    player: usize,
    profile: &StrategyProfile,
) -> Result<Vec<f64>> {
    check_player(game, player)?;
    profile.check_shape(game.shape())?;
    Ok(deviation_payoffs_raw(game, player, profile.strategies()))
}

/// Lowest-index action maximizing the deviation payoff of `player`.
pub fn best_response(game: &Game, player: usize, profile: &StrategyProfile) -> Result<usize> {
    let dev = deviation_payoffs(game, player, profile)?;
    Ok(argmax(&dev))
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// The largest gain any single player can get by deviating to a pure action.
///
/// Profiles that drifted off the simplex are re-normalized first.
pub fn nash_apr(profile: &StrategyProfile, game: &Game) -> Result<f64> {
    profile.check_shape(game.shape())?;
    let profile = profile.repaired();
    Ok(max_gain(&deviation_gains(game, profile.strategies())))
}

/// `NashApr` evaluated on arbitrary real vectors, with no normalization.
///
/// This is the multilinear extension whose gradient
/// [`nash_apr_subgradient`] returns; finite-difference checks need it because
/// perturbed points leave the simplex.
pub fn nash_apr_extended<S: AsRef<[f64]>>(strategies: &[S], game: &Game) -> Result<f64> {
    check_vectors(strategies, game)?;
    Ok(max_gain(&deviation_gains(game, strategies)))
}

/// Best unilateral gain of a single player.
pub fn nash_exploitability(profile: &StrategyProfile, game: &Game, player: usize) -> Result<f64> {
    check_player(game, player)?;
    profile.check_shape(game.shape())?;
    let profile = profile.repaired();
    let dev = deviation_payoffs_raw(game, player, profile.strategies());
    let eu = dot(&dev, profile.player(player));
    Ok(dev.iter().copied().fold(f64::NEG_INFINITY, f64::max) - eu)
}

/// Gradient of the active piece `u_{i*}(a*, sigma_{-i*}) - u_{i*}(sigma)`.
///
/// The maximizer is the lowest player index, then lowest action index, among
/// all gains within [`TIE_TOLERANCE`] of the maximum.
pub fn nash_apr_subgradient(profile: &StrategyProfile, game: &Game) -> Result<SubgradientReport> {
    profile.check_shape(game.shape())?;
    Ok(subgradient_raw(game, profile.strategies()))
}

pub(crate) fn subgradient_raw<S: AsRef<[f64]>>(game: &Game, strategies: &[S]) -> SubgradientReport {
    let dims = game.shape().action_counts();
    let n = dims.len();
    let gains = deviation_gains(game, strategies);
    let value = max_gain(&gains);

    let mut chosen = None;
    let mut ties = 0usize;
    for (p, g) in gains.iter().enumerate() {
        for (a, &x) in g.iter().enumerate() {
            if x >= value - TIE_TOLERANCE {
                ties += 1;
                chosen.get_or_insert((p, a));
            }
        }
    }
    let (ip, ia) = chosen.expect("a game has at least one action per player");

    let tensor = game.player_tensor(ip);
    // u_{i*} with player i* pinned to a*; axes are the remaining players.
    let pinned = slice_axis(tensor, dims, ip, ia);
    let pinned_dims: Vec<usize> = (0..n).filter(|&j| j != ip).map(|j| dims[j]).collect();
    let pinned_strats: Vec<&[f64]> = (0..n)
        .filter(|&j| j != ip)
        .map(|j| strategies[j].as_ref())
        .collect();

    let gradient = (0..n)
        .map(|j| {
            if j == ip {
                deviation_payoffs_raw(game, ip, strategies)
                    .into_iter()
                    .map(|x| -x)
                    .collect()
            } else {
                let reduced_axis = if j < ip { j } else { j - 1 };
                let deviate = contract_all_but(&pinned, &pinned_dims, &pinned_strats, reduced_axis);
                let stay = contract_all_but(tensor, dims, strategies, j);
                deviate.iter().zip(&stay).map(|(d, s)| d - s).collect()
            }
        })
        .collect();

    SubgradientReport {
        gradient,
        argmax_player: ip,
        argmax_action: ia,
        tie_flag: ties > 1,
        value,
    }
}

/// Sum over players of the l1 distance between their strategies.
pub fn l1_distance(p: &StrategyProfile, q: &StrategyProfile) -> Result<f64> {
    if p.num_players() != q.num_players()
        || p.strategies()
            .iter()
            .zip(q.strategies())
            .any(|(a, b)| a.len() != b.len())
    {
        return Err(Error::dim("profiles have different shapes"));
    }
    Ok(p.strategies()
        .iter()
        .zip(q.strategies())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .sum())
}

/// Largest absolute utility difference over players and joint actions.
pub fn max_distance(u: &Game, v: &Game) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::dim("games have different shapes"));
    }
    Ok(u.utilities()
        .iter()
        .zip(v.utilities())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
