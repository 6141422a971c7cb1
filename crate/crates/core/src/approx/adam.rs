use serde::{Deserialize, Serialize};

use super::{ApproximatorArch, ApproximatorParams, Gradients};
use crate::error::{Error, Result};

/// Adam moments and hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ApproximatorParams, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .trainable()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    fn congruent(&self, grads: &Gradients) -> bool {
        let same = |m: &[Vec<f64>]| {
            m.len() == grads.tensors.len()
                && m.iter()
                    .zip(&grads.tensors)
                    .all(|(a, b)| a.len() == b.len())
        };
        same(&self.first_moment) && same(&self.second_moment)
    }
}

/// One bias-corrected Adam update followed by clipping every weight and bias
/// into the architecture's clip range.
///
/// A non-finite gradient aborts before anything is modified.
pub fn adam_step(
    arch: &ApproximatorArch,
    params: &mut ApproximatorParams,
    grads: &Gradients,
    state: &mut AdamState,
) -> Result<()> {
    if !state.congruent(grads) || grads.tensors.len() != params.trainable().len() {
        return Err(Error::dim(
            "gradient, optimizer state and parameters are not congruent",
        ));
    }
    if !grads.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite gradient at optimizer step {}",
            state.step + 1
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - state.beta1.powi(t);
    let correction2 = 1.0 - state.beta2.powi(t);
    let (lo, hi) = arch.clip_range;
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);
    for (((p, g), m), v) in params
        .trainable_slices_mut()
        .into_iter()
        .zip(&grads.tensors)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] = (p[i] - lr * m_hat / (v_hat.sqrt() + eps)).clamp(lo, hi);
        }
    }
    params.version += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameShape;
    use crate::rng;

    fn setup() -> (ApproximatorArch, ApproximatorParams) {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 2).unwrap(), vec![3]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(0, 0)).unwrap();
        (arch, params)
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let (arch, mut params) = setup();
        let before = params.clone();
        let mut state = AdamState::new(&params, 1e-3);
        adam_step(
            &arch,
            &mut params,
            &Gradients::zeros_like(&before),
            &mut state,
        )
        .unwrap();
        assert_eq!(params.trainable(), before.trainable());
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_the_sign() {
        let (mut arch, mut params) = setup();
        arch.clip_range = (-10.0, 10.0);
        let before = params.clone();
        let mut grads = Gradients::zeros_like(&params);
        for (i, g) in grads.tensors.iter_mut().flatten().enumerate() {
            *g = if i % 2 == 0 { 0.3 } else { -2.0 };
        }
        let lr = 1e-2;
        let mut state = AdamState::new(&params, lr);
        adam_step(&arch, &mut params, &grads, &mut state).unwrap();
        // m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
        for ((after, prev), g) in params
            .trainable()
            .concat()
            .iter()
            .zip(before.trainable().concat())
            .zip(grads.tensors.concat())
        {
            let expected = prev - lr * g / (g.abs() + 1e-8);
            assert!((after - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn clipping_holds_after_every_step() {
        let (arch, mut params) = setup();
        let mut grads = Gradients::zeros_like(&params);
        let mut state = AdamState::new(&params, 0.5);
        for step in 0..20 {
            for (i, g) in grads.tensors.iter_mut().flatten().enumerate() {
                *g = if (i + step) % 3 == 0 { -5.0 } else { 4.0 };
            }
            adam_step(&arch, &mut params, &grads, &mut state).unwrap();
            assert!(params
                .trainable()
                .concat()
                .iter()
                .all(|&w| (0.0..=1.0).contains(&w)));
        }
        assert!(state.second_moment.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let (arch, mut params) = setup();
        let before = params.clone();
        let mut grads = Gradients::zeros_like(&params);
        grads.tensors[0][0] = f64::NAN;
        let mut state = AdamState::new(&params, 1e-3);
        assert!(matches!(
            adam_step(&arch, &mut params, &grads, &mut state),
            Err(Error::Numeric(_))
        ));
        assert_eq!(params, before);
        assert_eq!(state.step, 0);
    }
}
