//! The five structured game classes.
//!
//! Each `gen_*` function draws its instance parameters from the given stream
//! in a fixed order, builds the raw payoffs with the matching `*_raw`
//! function and normalizes them jointly into `[0, 1]`.

use rand::Rng;

use super::normalize_to_unit;
use crate::error::{Error, Result};
use crate::game::{Game, GameShape, RawGame};

fn two_player_shape(k: usize) -> Result<GameShape> {
    if k < 2 {
        return Err(Error::Spec(format!("need at least 2 actions, got {k}")));
    }
    GameShape::symmetric(2, k)
}

fn sign(x: i64) -> f64 {
    x.signum() as f64
}

/// Claims `1..=k`; each player gets the lower claim, plus `reward` if she made
/// it strictly, minus `reward` if the other did.
pub fn travelers_dilemma_raw(k: usize, reward: f64) -> Result<RawGame> {
    let shape = two_player_shape(k)?;
    Ok(RawGame::from_fn(shape, |p, a| {
        let own = a[p] as i64 + 1;
        let other = a[1 - p] as i64 + 1;
        own.min(other) as f64 + reward * sign(other - own)
    }))
}

/// Draws: `R` uniform over integers `reward_min ..= max(reward_min, floor(k / reward_divisor))`.
pub fn gen_travelers_dilemma<R: Rng + ?Sized>(
    k: usize,
    reward_min: f64,
    reward_divisor: f64,
    rng: &mut R,
) -> Result<Game> {
    if !(reward_divisor > 0.0) {
        return Err(Error::Spec("reward_divisor must be positive".into()));
    }
    let lo = reward_min.round() as i64;
    let hi = lo.max((k as f64 / reward_divisor).floor() as i64);
    let reward = rng.gen_range(lo..=hi) as f64;
    normalize_to_unit(&travelers_dilemma_raw(k, reward)?)
}

/// Grab times `1..=k`. The earlier grabber gets `high`, the other `mid`; a
/// tie rips the prize and both get `low`. With `decay`, all payoffs shrink by
/// `1 - (t_min - 1) / k`.
pub fn grab_the_dollar_raw(
    k: usize,
    low: f64,
    mid: f64,
    high: f64,
    decay: bool,
) -> Result<RawGame> {
    let shape = two_player_shape(k)?;
    Ok(RawGame::from_fn(shape, |p, a| {
        let own = a[p];
        let other = a[1 - p];
        let factor = if decay {
            1.0 - own.min(other) as f64 / k as f64
        } else {
            1.0
        };
        let base = match own.cmp(&other) {
            std::cmp::Ordering::Less => high,
            std::cmp::Ordering::Greater => mid,
            std::cmp::Ordering::Equal => low,
        };
        base * factor
    }))
}

/// Draws: three uniforms on `[0, 1)`, sorted into `low <= mid <= high`.
pub fn gen_grab_the_dollar<R: Rng + ?Sized>(k: usize, decay: bool, rng: &mut R) -> Result<Game> {
    let mut draws = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    draws.sort_by(f64::total_cmp);
    let [low, mid, high] = draws;
    normalize_to_unit(&grab_the_dollar_raw(k, low, mid, high, decay)?)
}

/// Concede times `1..=k`. The first to concede pays `t * c_i` and the other
/// wins `v_j - t * c_j`; simultaneous concession splits the object.
pub fn war_of_attrition_raw(k: usize, values: [f64; 2], costs: [f64; 2]) -> Result<RawGame> {
    let shape = two_player_shape(k)?;
    Ok(RawGame::from_fn(shape, |p, a| {
        let own = a[p] + 1;
        let other = a[1 - p] + 1;
        let stop = own.min(other) as f64;
        match own.cmp(&other) {
            std::cmp::Ordering::Less => -stop * costs[p],
            std::cmp::Ordering::Greater => values[p] - stop * costs[p],
            std::cmp::Ordering::Equal => values[p] / 2.0 - stop * costs[p],
        }
    }))
}

/// Draws, in order: `v_1, v_2` on `values`, then `c_1, c_2` on `costs`.
pub fn gen_war_of_attrition<R: Rng + ?Sized>(
    k: usize,
    values: (f64, f64),
    costs: (f64, f64),
    rng: &mut R,
) -> Result<Game> {
    let v = [uniform(rng, values)?, uniform(rng, values)?];
    let c = [uniform(rng, costs)?, uniform(rng, costs)?];
    normalize_to_unit(&war_of_attrition_raw(k, v, c)?)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Spec(format!("empty interval [{lo}, {hi}]")));
    }
    Ok(lo + (hi - lo) * rng.gen::<f64>())
}

/// Prices `1..=k`, demand `D(p) = k - p + 1`. The lowest-price firms split
/// `(p* - c) * D(p*)` equally; everyone else earns 0.
pub fn bertrand_oligopoly_raw(players: usize, k: usize, unit_cost: f64) -> Result<RawGame> {
    if players < 2 || k < 2 {
        return Err(Error::Spec("need at least 2 players and 2 prices".into()));
    }
    let shape = GameShape::symmetric(players, k)?;
    Ok(RawGame::from_fn(shape, |p, a| {
        let lowest = *a.iter().min().expect("at least two players");
        if a[p] != lowest {
            return 0.0;
        }
        let winners = a.iter().filter(|&&x| x == lowest).count() as f64;
        let price = (lowest + 1) as f64;
        let demand = k as f64 - price + 1.0;
        (price - unit_cost) * demand / winners
    }))
}

/// Draws: unit cost uniform on `[0, cost_high]`.
pub fn gen_bertrand_oligopoly<R: Rng + ?Sized>(
    players: usize,
    k: usize,
    cost_high: f64,
    rng: &mut R,
) -> Result<Game> {
    let cost = uniform(rng, (0.0, cost_high))?;
    normalize_to_unit(&bertrand_oligopoly_raw(players, k, cost)?)
}

/// Plurality winner with ties going to the lowest candidate index.
pub fn plurality_winner(votes: &[usize], candidates: usize) -> usize {
    let mut tally = vec![0usize; candidates];
    for &v in votes {
        tally[v] += 1;
    }
    let mut best = 0;
    for c in 1..candidates {
        if tally[c] > tally[best] {
            best = c;
        }
    }
    best
}

/// `weights[i * k + c]` is player `i`'s value for candidate `c` winning.
pub fn majority_voting_from_weights(players: usize, k: usize, weights: &[f64]) -> Result<Game> {
    if players < 2 || k < 2 {
        return Err(Error::Spec(
            "need at least 2 players and 2 candidates".into(),
        ));
    }
    if weights.len() != players * k {
        return Err(Error::dim("one weight per player and candidate"));
    }
    let shape = GameShape::symmetric(players, k)?;
    Game::from_fn(shape, |p, a| weights[p * k + plurality_winner(a, k)])
}

/// Draws: `w_i(c)` uniform on `[0, 1)`, player-major.
pub fn gen_majority_voting<R: Rng + ?Sized>(players: usize, k: usize, rng: &mut R) -> Result<Game> {
    let weights: Vec<f64> = (0..players * k).map(|_| rng.gen::<f64>()).collect();
    majority_voting_from_weights(players, k, &weights)
}
