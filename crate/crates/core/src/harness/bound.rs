//! Covering-number generalization bound for Lipschitz approximator classes.
//!
//! With `K = ceil(4 L / r)` and `S = sum_i (|A_i| - 1) ln((e 40 n |A_i| / r + e |A_i|) / (|A_i| - 1))`,
//! the log covering number is at most `K^{n|A|} S`, and
//!
//! ```text
//! Delta_m = min_r sqrt(2 ln N / m) + 2 r
//! bound   = 2 Delta_m + 4 sqrt(2 ln(4 / delta) / m)
//! ```
//!
//! Everything is evaluated through logarithms, since `K^{n|A|}` leaves the
//! range of `f64` for all but the smallest shapes.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameShape;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Training set size.
    pub m: f64,
    /// The bound holds with probability at least `1 - delta`.
    pub delta: f64,
    pub lipschitz: f64,
    pub shape: GameShape,
    pub r_grid: Vec<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 1.0) || !self.m.is_finite() {
            return Err(Error::config("m must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta must lie in (0, 1)"));
        }
        if !(self.lipschitz >= 0.0) || !self.lipschitz.is_finite() {
            return Err(Error::config(
                "Lipschitz constant must be finite and non-negative",
            ));
        }
        if self.r_grid.is_empty() || self.r_grid.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::config("radius grid must be non-empty and positive"));
        }
        Ok(())
    }
}

/// Terms at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusTerm {
    pub r: f64,
    /// `ln ln N`; `-inf` when `ln N = 0`.
    pub log_ln_covering: f64,
    /// `sqrt(2 ln N / m) + 2 r`, `+inf` on overflow.
    pub delta_m: f64,
    pub overflow: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub terms: Vec<RadiusTerm>,
    pub best_r: f64,
    pub delta_m: f64,
    /// `4 sqrt(2 ln(4 / delta) / m)`.
    pub confidence: f64,
    pub bound: f64,
    /// The minimum over the grid overflowed.
    pub overflow: bool,
}

/// `ln S`, or `None` when every player has a single action (`S = 0`).
fn log_sum_term(shape: &GameShape, r: f64) -> Option<f64> {
    let n = shape.num_players() as f64;
    let s: f64 = shape
        .action_counts()
        .iter()
        .filter(|&&k| k > 1)
        .map(|&k| {
            let k = k as f64;
            (k - 1.0) * ((E * 40.0 * n * k / r + E * k) / (k - 1.0)).ln()
        })
        .sum();
    (s > 0.0).then(|| s.ln())
}

fn radius_term(inputs: &BoundInputs, r: f64) -> RadiusTerm {
    let cells = (4.0 * inputs.lipschitz / r).ceil();
    let exponent = inputs.shape.utility_count() as f64;
    let log_ln_n = match log_sum_term(&inputs.shape, r) {
        Some(log_s) if cells > 0.0 => exponent * cells.ln() + log_s,
        _ => f64::NEG_INFINITY,
    };
    // sqrt(2 ln N / m) = exp((ln 2 + ln ln N - ln m) / 2)
    let log_root = 0.5 * (std::f64::consts::LN_2 + log_ln_n - inputs.m.ln());
    let root = log_root.exp();
    let delta_m = root + 2.0 * r;
    RadiusTerm {
        r,
        log_ln_covering: log_ln_n,
        delta_m,
        overflow: !delta_m.is_finite(),
    }
}

pub fn evaluate_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let terms: Vec<RadiusTerm> = inputs
        .r_grid
        .iter()
        .map(|&r| radius_term(inputs, r))
        .collect();
    let best = terms
        .iter()
        .min_by(|a, b| a.delta_m.total_cmp(&b.delta_m))
        .expect("grid is non-empty");
    let confidence = 4.0 * (2.0 * (4.0 / inputs.delta).ln() / inputs.m).sqrt();
    let bound = 2.0 * best.delta_m + confidence;
    Ok(BoundReport {
        best_r: best.r,
        delta_m: best.delta_m,
        overflow: best.overflow,
        terms,
        confidence,
        bound,
    })
}

/// `r_0 * factor^k` for `k = 0..count`.
pub fn geometric_grid(r0: f64, factor: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r0 * factor.powi(k as i32)).collect()
}
