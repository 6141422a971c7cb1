//! Seeded game generators, per-instance normalization and dataset files.
//!
//! Game `i` of a dataset is drawn from stream `i` of the spec's seed (see
//! [`crate::rng`]), so datasets are prefix-stable and can be generated in any
//! order.

mod classes;
pub(crate) mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, GameShape, RawGame};
use crate::parallel;
use crate::rng;

pub use classes::{
    gen_bertrand_oligopoly, gen_grab_the_dollar, gen_majority_voting, gen_travelers_dilemma,
    gen_war_of_attrition,
};
pub use io::{export_json, import_json, load_dataset, save_dataset, FORMAT_VERSION, MAGIC};

/// The five supported game classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameClass {
    TravelersDilemma,
    GrabTheDollar,
    WarOfAttrition,
    BertrandOligopoly,
    MajorityVoting,
}

impl GameClass {
    pub const ALL: [GameClass; 5] = [
        GameClass::TravelersDilemma,
        GameClass::GrabTheDollar,
        GameClass::WarOfAttrition,
        GameClass::BertrandOligopoly,
        GameClass::MajorityVoting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GameClass::TravelersDilemma => "travelers_dilemma",
            GameClass::GrabTheDollar => "grab_the_dollar",
            GameClass::WarOfAttrition => "war_of_attrition",
            GameClass::BertrandOligopoly => "bertrand_oligopoly",
            GameClass::MajorityVoting => "majority_voting",
        }
    }

    pub fn two_player_only(self) -> bool {
        matches!(
            self,
            GameClass::TravelersDilemma | GameClass::GrabTheDollar | GameClass::WarOfAttrition
        )
    }

    /// Class parameters and their defaults.
    ///
    /// - `travelers_dilemma`: the reward/penalty `R` is uniform over the
    ///   integers `reward_min ..= max(reward_min, floor(K / reward_divisor))`.
    /// - `grab_the_dollar`: `decay` = 1 scales payoffs by `1 - (t_min - 1) / K`;
    ///   0 disables it.
    /// - `war_of_attrition`: valuations uniform on `[value_low, value_high]`,
    ///   per-step costs uniform on `[cost_low, cost_high]`.
    /// - `bertrand_oligopoly`: unit cost uniform on `[0, cost_high]`.
    /// - `majority_voting`: none.
    pub fn default_params(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            GameClass::TravelersDilemma => &[("reward_min", 2.0), ("reward_divisor", 5.0)],
            GameClass::GrabTheDollar => &[("decay", 1.0)],
            GameClass::WarOfAttrition => &[
                ("value_low", 0.5),
                ("value_high", 1.0),
                ("cost_low", 0.01),
                ("cost_high", 0.1),
            ],
            GameClass::BertrandOligopoly => &[("cost_high", 0.5)],
            GameClass::MajorityVoting => &[],
        };
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for GameClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        GameClass::ALL
            .into_iter()
            .find(|c| c.name() == key || c.name().replace('_', "") == key)
            .ok_or_else(|| Error::Spec(format!("unknown game class {s:?}")))
    }
}

/// Everything needed to regenerate a dataset bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub class: GameClass,
    pub shape: GameShape,
    pub seed: u64,
    pub class_params: BTreeMap<String, f64>,
}

impl GeneratorSpec {
    /// A spec with the class's default parameters.
    pub fn new(class: GameClass, shape: GameShape, seed: u64) -> Result<Self> {
        let spec = Self {
            class,
            shape,
            seed,
            class_params: class.default_params(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = self.shape.action_counts();
        if self.class.two_player_only() && counts.len() != 2 {
            return Err(Error::Spec(format!(
                "{} is a 2-player game, got {} players",
                self.class,
                counts.len()
            )));
        }
        if counts.iter().any(|&k| k < 2) {
            return Err(Error::Spec("every player needs at least 2 actions".into()));
        }
        // Every class draws all players' actions from one set (claims, times,
        // prices, candidates).
        if counts.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Spec(format!(
                "{} needs equal action counts",
                self.class
            )));
        }
        for key in self.class.default_params().keys() {
            if !self.class_params.contains_key(key) {
                return Err(Error::Spec(format!("missing class parameter {key:?}")));
            }
        }
        if let Some(bad) = self.class_params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Spec(format!("parameter {:?} is not finite", bad.0)));
        }
        Ok(())
    }

    pub fn param(&self, key: &str) -> f64 {
        self.class_params
            .get(key)
            .copied()
            .or_else(|| self.class.default_params().get(key).copied())
            .unwrap_or(0.0)
    }

    /// Game `index` of this spec's family.
    pub fn generate_one(&self, index: u64) -> Result<Game> {
        let mut stream = rng::stream(self.seed, index);
        let k = self.shape.num_actions(0);
        let n = self.shape.num_players();
        match self.class {
            GameClass::TravelersDilemma => gen_travelers_dilemma(
                k,
                self.param("reward_min"),
                self.param("reward_divisor"),
                &mut stream,
            ),
            GameClass::GrabTheDollar => {
                gen_grab_the_dollar(k, self.param("decay") != 0.0, &mut stream)
            }
            GameClass::WarOfAttrition => gen_war_of_attrition(
                k,
                (self.param("value_low"), self.param("value_high")),
                (self.param("cost_low"), self.param("cost_high")),
                &mut stream,
            ),
            GameClass::BertrandOligopoly => {
                gen_bertrand_oligopoly(n, k, self.param("cost_high"), &mut stream)
            }
            GameClass::MajorityVoting => gen_majority_voting(n, k, &mut stream),
        }
    }
}

/// Index lists into [`Dataset::games`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Contiguous split with validation and test carved from the end:
    /// `[train | validation | test]`.
    pub fn tail(count: usize, validation: usize, test: usize) -> Result<Self> {
        if validation + test > count {
            return Err(Error::config(format!(
                "cannot carve {validation} validation and {test} test games from {count}"
            )));
        }
        let train_end = count - validation - test;
        Ok(Self {
            train: (0..train_end).collect(),
            validation: (train_end..train_end + validation).collect(),
            test: (train_end + validation..count).collect(),
        })
    }

    /// Default proportions: the last 10% (at most 200) is test, the 10% before
    /// it is validation, the rest is train.
    pub fn protocol(count: usize) -> Self {
        let test = (count / 10).min(200);
        let validation = count / 10;
        Self::tail(count, validation, test).expect("proportions never exceed count")
    }

    fn validate(&self, count: usize) -> Result<()> {
        let mut seen = vec![false; count];
        for &i in self.train.iter().chain(&self.validation).chain(&self.test) {
            if i >= count {
                return Err(Error::Data(format!(
                    "split index {i} out of range ({count} games)"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Data(format!("split index {i} appears twice")));
            }
        }
        Ok(())
    }
}

/// Which part of a [`Split`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Train,
    Validation,
    Test,
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitKind::Train),
            "validation" | "val" => Ok(SplitKind::Validation),
            "test" => Ok(SplitKind::Test),
            _ => Err(Error::config(format!("unknown split {s:?}"))),
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SplitKind::Train => "train",
            SplitKind::Validation => "validation",
            SplitKind::Test => "test",
        })
    }
}

/// A seeded collection of games with a train/validation/test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub spec: GeneratorSpec,
    pub games: Vec<Game>,
    pub split: Split,
}

impl Dataset {
    pub fn new(spec: GeneratorSpec, games: Vec<Game>, split: Split) -> Result<Self> {
        if let Some(g) = games.iter().find(|g| g.shape() != &spec.shape) {
            return Err(Error::dim(format!(
                "game shape {:?} differs from spec shape {:?}",
                g.shape().action_counts(),
                spec.shape.action_counts()
            )));
        }
        split.validate(games.len())?;
        Ok(Self { spec, games, split })
    }

    pub fn indices(&self, kind: SplitKind) -> &[usize] {
        match kind {
            SplitKind::Train => &self.split.train,
            SplitKind::Validation => &self.split.validation,
            SplitKind::Test => &self.split.test,
        }
    }

    pub fn split_games(&self, kind: SplitKind) -> Vec<&Game> {
        self.indices(kind).iter().map(|&i| &self.games[i]).collect()
    }

    /// Replaces the split with a contiguous `[train | validation | test]` tail split.
    pub fn with_tail_split(mut self, validation: usize, test: usize) -> Result<Self> {
        self.split = Split::tail(self.games.len(), validation, test)?;
        Ok(self)
    }
}

/// Generates `count` games under `spec` with the default [`Split::protocol`].
pub fn generate(spec: &GeneratorSpec, count: usize) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::config("count must be positive"));
    }
    spec.validate()?;
    let games = parallel::map_indexed(count, |i| spec.generate_one(i as u64))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(spec.clone(), games, Split::protocol(count))
}

/// Joint affine map `(x - min) / (max - min)` over all players' utilities.
///
/// A constant game maps to 0.5 everywhere.
pub fn normalize_to_unit(game: &RawGame) -> Result<Game> {
    if let Some(i) = game.utilities.iter().position(|x| !x.is_finite()) {
        return Err(Error::Data(format!("non-finite utility at position {i}")));
    }
    let (lo, hi) = game
        .utilities
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let utilities = if hi > lo {
        let span = hi - lo;
        game.utilities
            .iter()
            .map(|&x| ((x - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.5; game.utilities.len()]
    };
    Game::new(game.shape.clone(), utilities)
}
