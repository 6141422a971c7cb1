use rand::Rng;

use super::{forward, ApproximatorArch, ApproximatorParams, Mode};
use crate::error::{Error, Result};
use crate::game::Game;

/// Relative size of the probe perturbation.
const PROBE_STEP: f64 = 1e-3;

/// Empirical lower bound on the approximator's Lipschitz constant,
/// `max ||h(u) - h(v)||_1 / ||u - v||_max` over `probes` random pairs.
///
/// Each probe draws `u` uniformly from `[0, 1]^{n|A|}` and moves every entry
/// by up to `PROBE_STEP`, staying inside `[0, 1]`.
pub fn lipschitz_estimate<R: Rng + ?Sized>(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    probes: usize,
    rng: &mut R,
) -> Result<f64> {
    if probes == 0 {
        return Err(Error::config("need at least one probe"));
    }
    let width = arch.input_width();
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        let u: Vec<f64> = (0..width).map(|_| rng.gen::<f64>()).collect();
        let v: Vec<f64> = u
            .iter()
            .map(|&x| (x + PROBE_STEP * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0))
            .collect();
        let dist = u
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dist == 0.0 {
            continue;
        }
        let gu = Game::new(arch.shape.clone(), u)?;
        let gv = Game::new(arch.shape.clone(), v)?;
        let (out, _) = forward(arch, params, &[&gu, &gv], Mode::Eval)?;
        let moved: f64 = out[0]
            .flatten()
            .iter()
            .zip(out[1].flatten())
            .map(|(a, b)| (a - b).abs())
            .sum();
        best = best.max(moved / dist);
    }
    Ok(best)
}
