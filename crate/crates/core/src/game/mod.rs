//! Normal-form games, mixed strategy profiles and the Nash approximation loss.
//!
//! Utilities are stored player-major: player `i`'s tensor occupies
//! `utilities[i * |A| .. (i + 1) * |A|]`, and inside it joint actions are laid
//! out row-major over `(a_1, ..., a_n)` with the last player's action varying
//! fastest.

mod loss;
mod oracle;
pub(crate) mod tensor;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use loss::{
    argmax, deviation_gains, deviation_payoffs_raw, loss_of_vectors, subgradient_raw,
};
pub use loss::{
    best_response, deviation_payoffs, expected_utility, l1_distance, max_distance, nash_apr,
    nash_apr_extended, nash_apr_subgradient, nash_exploitability, SubgradientReport, TIE_TOLERANCE,
};
pub use oracle::{brute_force_nash_apr, BRUTE_FORCE_LIMIT};

/// Absolute tolerance on the sum of a strategy vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Number of players and the size of each player's action set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct GameShape {
    action_counts: Vec<usize>,
}

impl GameShape {
    pub fn new(action_counts: Vec<usize>) -> Result<Self> {
        if action_counts.len() < 2 {
            return Err(Error::dim(format!(
                "a game needs at least 2 players, got {}",
                action_counts.len()
            )));
        }
        if let Some(p) = action_counts.iter().position(|&k| k == 0) {
            return Err(Error::dim(format!("player {p} has no actions")));
        }
        action_counts
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .and_then(|joint| joint.checked_mul(action_counts.len()))
            .ok_or_else(|| Error::Size("joint action count overflows".into()))?;
        Ok(Self { action_counts })
    }

    /// `n` players with `k` actions each.
    pub fn symmetric(players: usize, actions: usize) -> Result<Self> {
        Self::new(vec![actions; players])
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    /// `|A|`, the number of joint actions.
    pub fn joint_count(&self) -> usize {
        self.action_counts.iter().product()
    }

    /// `n * |A|`, the number of utility scalars in a game of this shape.
    pub fn utility_count(&self) -> usize {
        self.num_players() * self.joint_count()
    }

    /// Total number of strategy entries, `sum_i |A_i|`.
    pub fn strategy_len(&self) -> usize {
        self.action_counts.iter().sum()
    }

    /// Row-major strides, last player fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.num_players()];
        for p in (0..self.num_players() - 1).rev() {
            strides[p] = strides[p + 1] * self.action_counts[p + 1];
        }
        strides
    }

    pub fn joint_index(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.num_players());
        actions
            .iter()
            .zip(&self.action_counts)
            .fold(0, |idx, (&a, &k)| idx * k + a)
    }

    pub fn joint_actions(&self, mut index: usize) -> Vec<usize> {
        let mut actions = vec![0; self.num_players()];
        for p in (0..self.num_players()).rev() {
            actions[p] = index % self.action_counts[p];
            index /= self.action_counts[p];
        }
        actions
    }

    pub fn uniform_profile(&self) -> StrategyProfile {
        StrategyProfile {
            strategies: self
                .action_counts
                .iter()
                .map(|&k| vec![1.0 / k as f64; k])
                .collect(),
        }
    }
}

impl TryFrom<Vec<usize>> for GameShape {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GameShape> for Vec<usize> {
    fn from(s: GameShape) -> Self {
        s.action_counts
    }
}

/// A game with arbitrary finite utilities, before normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGame {
    pub shape: GameShape,
    /// Player-major, row-major utilities; length `n * |A|`.
    pub utilities: Vec<f64>,
}

impl RawGame {
    pub fn new(shape: GameShape, utilities: Vec<f64>) -> Result<Self> {
        if utilities.len() != shape.utility_count() {
            return Err(Error::dim(format!(
                "expected {} utilities, got {}",
                shape.utility_count(),
                utilities.len()
            )));
        }
        Ok(Self { shape, utilities })
    }

    /// Builds a raw game by evaluating `f(player, joint_actions)`.
    pub fn from_fn(shape: GameShape, mut f: impl FnMut(usize, &[usize]) -> f64) -> Self {
        let joint = shape.joint_count();
        let mut utilities = vec![0.0; shape.utility_count()];
        for idx in 0..joint {
            let actions = shape.joint_actions(idx);
            for p in 0..shape.num_players() {
                utilities[p * joint + idx] = f(p, &actions);
            }
        }
        Self { shape, utilities }
    }
}

impl From<Game> for RawGame {
    fn from(g: Game) -> Self {
        Self {
            shape: g.shape,
            utilities: g.utilities,
        }
    }
}

/// A normal-form game whose utilities all lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Game {
    shape: GameShape,
    utilities: Vec<f64>,
}

impl Game {
    pub fn new(shape: GameShape, utilities: Vec<f64>) -> Result<Self> {
        if utilities.len() != shape.utility_count() {
            return Err(Error::dim(format!(
                "expected {} utilities, got {}",
                shape.utility_count(),
                utilities.len()
            )));
        }
        if let Some(i) = utilities.iter().position(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::Data(format!(
                "utility {} at position {i} is outside [0, 1]",
                utilities[i]
            )));
        }
        Ok(Self { shape, utilities })
    }

    /// Two-player game from row/column payoff matrices indexed `[row][col]`.
    pub fn bimatrix<R: AsRef<[f64]>>(row_payoffs: &[R], col_payoffs: &[R]) -> Result<Self> {
        let rows = row_payoffs.len();
        let cols = row_payoffs.first().map_or(0, |r| r.as_ref().len());
        if col_payoffs.len() != rows
            || row_payoffs
                .iter()
                .chain(col_payoffs)
                .any(|r| r.as_ref().len() != cols)
        {
            return Err(Error::dim("payoff matrices must both be rows x cols"));
        }
        let shape = GameShape::new(vec![rows, cols])?;
        let utilities = row_payoffs
            .iter()
            .chain(col_payoffs)
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(shape, utilities)
    }

    pub fn from_fn(shape: GameShape, f: impl FnMut(usize, &[usize]) -> f64) -> Result<Self> {
        let raw = RawGame::from_fn(shape, f);
        Self::new(raw.shape, raw.utilities)
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    /// All utilities, player-major.
    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    /// Player `player`'s utility tensor over joint actions.
    pub fn player_tensor(&self, player: usize) -> &[f64] {
        let joint = self.shape.joint_count();
        &self.utilities[player * joint..(player + 1) * joint]
    }

    pub fn utility(&self, player: usize, actions: &[usize]) -> f64 {
        self.player_tensor(player)[self.shape.joint_index(actions)]
    }

    pub fn into_utilities(self) -> Vec<f64> {
        self.utilities
    }
}

/// One probability vector per player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    strategies: Vec<Vec<f64>>,
}

impl StrategyProfile {
    /// Validates non-negativity and unit sums (within [`SUM_TOLERANCE`]).
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        for (p, s) in strategies.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::dim(format!("player {p} has an empty strategy")));
            }
            if s.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Data(format!(
                    "player {p} strategy has a negative or non-finite entry"
                )));
            }
            let sum: f64 = s.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::Data(format!("player {p} strategy sums to {sum}")));
            }
        }
        Ok(Self { strategies })
    }

    /// Clamps negatives to zero and rescales each vector to sum to one.
    ///
    /// A vector with no positive mass becomes uniform.
    pub fn normalized(mut strategies: Vec<Vec<f64>>) -> Result<Self> {
        for s in &mut strategies {
            normalize_in_place(s)?;
        }
        Ok(Self { strategies })
    }

    /// Wraps vectors without any validation.
    ///
    /// Only meant for iterates already known to be on the simplex.
    pub(crate) fn from_vecs_unchecked(strategies: Vec<Vec<f64>>) -> Self {
        Self { strategies }
    }

    /// A degenerate profile where player `i` plays `actions[i]` with certainty.
    pub fn pure(shape: &GameShape, actions: &[usize]) -> Result<Self> {
        if actions.len() != shape.num_players() {
            return Err(Error::dim("one action per player is required"));
        }
        let strategies = actions
            .iter()
            .zip(shape.action_counts())
            .enumerate()
            .map(|(p, (&a, &k))| {
                if a >= k {
                    return Err(Error::dim(format!(
                        "action {a} out of range for player {p}"
                    )));
                }
                let mut s = vec![0.0; k];
                s[a] = 1.0;
                Ok(s)
            })
            .collect::<Result<_>>()?;
        Ok(Self { strategies })
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.strategies
    }

    pub fn player(&self, player: usize) -> &[f64] {
        &self.strategies[player]
    }

    pub fn into_strategies(self) -> Vec<Vec<f64>> {
        self.strategies
    }

    /// Concatenation of all players' vectors.
    pub fn flatten(&self) -> Vec<f64> {
        self.strategies.iter().flatten().copied().collect()
    }

    pub fn matches(&self, shape: &GameShape) -> bool {
        self.strategies.len() == shape.num_players()
            && self
                .strategies
                .iter()
                .zip(shape.action_counts())
                .all(|(s, &k)| s.len() == k)
    }

    pub(crate) fn check_shape(&self, shape: &GameShape) -> Result<()> {
        if self.matches(shape) {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "profile shape {:?} does not match game shape {:?}",
                self.strategies.iter().map(Vec::len).collect::<Vec<_>>(),
                shape.action_counts()
            )))
        }
    }

    /// Returns `self`, or a re-normalized copy if any vector drifted off the
    /// simplex by more than [`SUM_TOLERANCE`].
    pub fn repaired(&self) -> Cow<'_, Self> {
        let drifted = self.strategies.iter().any(|s| {
            s.iter().any(|&x| x < 0.0) || (s.iter().sum::<f64>() - 1.0).abs() > SUM_TOLERANCE
        });
        if drifted {
            let mut strategies = self.strategies.clone();
            for s in &mut strategies {
                // Non-finite entries cannot occur in a constructed profile.
                let _ = normalize_in_place(s);
            }
            Cow::Owned(Self { strategies })
        } else {
            Cow::Borrowed(self)
        }
    }
}

fn normalize_in_place(s: &mut [f64]) -> Result<()> {
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite strategy entry".into()));
    }
    for x in s.iter_mut() {
        *x = x.max(0.0);
    }
    let sum: f64 = s.iter().sum();
    if sum > 0.0 {
        s.iter_mut().for_each(|x| *x /= sum);
    } else {
        let u = 1.0 / s.len() as f64;
        s.iter_mut().for_each(|x| *x = u);
    }
    Ok(())
}

/// Small reference games with known equilibria.
pub mod fixtures {
    use super::*;

    /// Two pure equilibria (L, D), (R, U) and a mixed one.
    pub fn coordination() -> Game {
        Game::bimatrix(&[[0.0, 1.0], [0.5, 0.0]], &[[0.0, 0.5], [1.0, 0.0]]).unwrap()
    }

    /// Row payoff at (R, U) is `0.5 + eps`; `eps < 0` has the unique NE (L, U),
    /// `eps > 0` the unique NE (R, U).
    pub fn perturbed(eps: f64) -> Game {
        Game::bimatrix(&[[0.5, 1.0], [0.5 + eps, 0.0]], &[[0.5, 0.0], [1.0, 0.0]]).unwrap()
    }
}
