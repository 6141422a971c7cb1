//! Learning to approximate Nash equilibria of n-player normal-form games.
//!
//! The crate is organised around five parts:
//!
//! - [`game`]: games, mixed strategy profiles, the Nash approximation loss
//!   (`NashApr`) with its subgradient, and brute-force oracles.
//! - [`gen`]: seeded generators for five structured game classes and a
//!   bit-exact dataset file format.
//! - [`solvers`]: fictitious play, regret matching, replicator dynamics and a
//!   warm-startable projected descent on `NashApr`.
//! - [`approx`]: a feed-forward approximator trained by minibatch SGD (Adam)
//!   directly on `NashApr`, with no equilibrium labels.
//! - [`harness`]: experiment runners, the covering-number generalization
//!   bound, and the self-check suites.
//!
//! ```
//! use nashapr::game::{Game, GameShape, StrategyProfile, nash_apr};
//!
//! let shape = GameShape::new(vec![2, 2]).unwrap();
//! // Row player picks L/R, column player picks U/D.
//! let game = Game::bimatrix(
//!     &[[0.0, 1.0], [0.5, 0.0]],
//!     &[[0.0, 0.5], [1.0, 0.0]],
//! ).unwrap();
//! let pure = StrategyProfile::pure(&shape, &[0, 1]).unwrap();
//! assert_eq!(nash_apr(&pure, &game).unwrap(), 0.0);
//! ```

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod game;
pub mod gen;
pub mod harness;
pub mod parallel;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
