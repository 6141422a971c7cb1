//! Feed-forward Nash equilibrium approximator.
//!
//! The network maps a game's flattened utilities to one strategy per player:
//! hidden layers are `affine -> batch norm (no learnable scale/shift) -> ReLU`,
//! and each player has a softmax head. It is trained without equilibrium
//! labels by minimizing the batch-average `NashApr` of its own outputs.

mod adam;
mod io;
mod lipschitz;
mod network;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameShape;

pub use adam::{adam_step, AdamState};
pub use io::{load_model, save_model, ModelFile, MODEL_MAGIC, MODEL_VERSION};
pub use lipschitz::lipschitz_estimate;
pub use network::{backward, batch_loss, forward, predict, ForwardCache, Gradients, Mode};
pub(crate) use train::mean_std;
pub use train::{evaluate, train, MinibatchSampler, TrainConfig, TrainLog, TrainLogRow, Trainer};

/// Network layout and normalization constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximatorArch {
    pub shape: GameShape,
    pub hidden_layers: Vec<usize>,
    pub batchnorm_epsilon: f64,
    /// Weight of the old running statistic in each update.
    pub bn_momentum: f64,
    /// Every weight and bias is clipped into `[lo, hi]` after each step.
    pub clip_range: (f64, f64),
}

impl ApproximatorArch {
    /// Desk-scale default: two hidden layers of 128 units.
    pub fn new(shape: GameShape) -> Self {
        Self::with_hidden(shape, vec![128, 128])
    }

    pub fn with_hidden(shape: GameShape, hidden_layers: Vec<usize>) -> Self {
        Self {
            shape,
            hidden_layers,
            batchnorm_epsilon: 1e-5,
            bn_momentum: 0.99,
            clip_range: (0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.contains(&0) {
            return Err(Error::config("hidden widths must be at least 1"));
        }
        let (lo, hi) = self.clip_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(format!("invalid clip range [{lo}, {hi}]")));
        }
        if !(self.batchnorm_epsilon > 0.0) || !(0.0..1.0).contains(&self.bn_momentum) {
            return Err(Error::config("invalid batch-norm constants"));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.shape.utility_count()
    }

    /// Fan-in of hidden layer `l` (or of the heads when `l == hidden_layers.len()`).
    fn fan_in(&self, l: usize) -> usize {
        if l == 0 {
            self.input_width()
        } else {
            self.hidden_layers[l - 1]
        }
    }
}

/// An affine map `x -> W x + b`, `W` stored row-major as `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }
}

/// Batch-norm statistics used in eval mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// All network tensors. Equality ignores the optimizer-step counter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproximatorParams {
    pub hidden: Vec<Dense>,
    pub running: Vec<RunningStats>,
    pub heads: Vec<Dense>,
    /// Bumped by every optimizer step; forward caches remember it.
    #[serde(skip)]
    pub(crate) version: u64,
}

impl PartialEq for ApproximatorParams {
    fn eq(&self, other: &Self) -> bool {
        self.hidden == other.hidden && self.running == other.running && self.heads == other.heads
    }
}

impl ApproximatorParams {
    /// All-zero weights, running mean 0 and variance 1.
    pub fn zeros(arch: &ApproximatorArch) -> Self {
        let hidden: Vec<Dense> = arch
            .hidden_layers
            .iter()
            .enumerate()
            .map(|(l, &w)| Dense::zeros(arch.fan_in(l), w))
            .collect();
        let running = arch
            .hidden_layers
            .iter()
            .map(|&w| RunningStats {
                mean: vec![0.0; w],
                var: vec![1.0; w],
            })
            .collect();
        let last = arch.fan_in(arch.hidden_layers.len());
        let heads = arch
            .shape
            .action_counts()
            .iter()
            .map(|&k| Dense::zeros(last, k))
            .collect();
        Self {
            hidden,
            running,
            heads,
            version: 0,
        }
    }

    /// Uniform draws on the clip range scaled by `1 / sqrt(fan_in)`, then clipped.
    pub fn init<R: Rng + ?Sized>(arch: &ApproximatorArch, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let mut params = Self::zeros(arch);
        let (lo, hi) = arch.clip_range;
        for t in params.trainable_mut() {
            let fan_in = t.1;
            let scale = 1.0 / (fan_in as f64).sqrt();
            for x in t.0.iter_mut() {
                *x = ((lo + (hi - lo) * rng.gen::<f64>()) * scale).clamp(lo, hi);
            }
        }
        Ok(params)
    }

    /// Weights and biases in declaration order: each hidden layer's weight
    /// then bias, followed by each head's weight then bias.
    pub fn trainable(&self) -> Vec<&[f64]> {
        self.hidden
            .iter()
            .chain(&self.heads)
            .flat_map(|d| [d.weight.as_slice(), d.bias.as_slice()])
            .collect()
    }

    /// Mutable trainable tensors paired with their layer fan-in.
    fn trainable_mut(&mut self) -> Vec<(&mut Vec<f64>, usize)> {
        self.hidden
            .iter_mut()
            .chain(self.heads.iter_mut())
            .flat_map(|d| {
                let fan_in = d.inputs;
                [(&mut d.weight, fan_in), (&mut d.bias, fan_in)]
            })
            .collect()
    }

    /// Mutable views in the order of [`Self::trainable`].
    pub fn trainable_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.trainable_mut()
            .into_iter()
            .map(|(t, _)| t.as_mut_slice())
            .collect()
    }

    pub fn num_trainable(&self) -> usize {
        self.trainable().iter().map(|t| t.len()).sum()
    }

    /// Checks tensor sizes against `arch`.
    pub fn check_arch(&self, arch: &ApproximatorArch) -> Result<()> {
        let want = Self::zeros(arch);
        let sizes = |p: &Self| -> Vec<(usize, usize, usize, usize)> {
            p.hidden
                .iter()
                .chain(&p.heads)
                .map(|d| (d.inputs, d.outputs, d.weight.len(), d.bias.len()))
                .collect()
        };
        let running_ok = self.running.len() == want.running.len()
            && self
                .running
                .iter()
                .zip(&want.running)
                .all(|(a, b)| a.mean.len() == b.mean.len() && a.var.len() == b.var.len());
        if sizes(self) != sizes(&want) || !running_ok {
            return Err(Error::dim("parameters do not match the architecture"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn init_respects_clip_range_and_scale() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 3).unwrap(), vec![16, 8]);
        let p = ApproximatorParams::init(&arch, &mut rng::stream(0, 0)).unwrap();
        p.check_arch(&arch).unwrap();
        let first = &p.hidden[0];
        assert_eq!((first.inputs, first.outputs), (18, 16));
        let bound = 1.0 / 18f64.sqrt();
        assert!(first.weight.iter().all(|&w| (0.0..=bound).contains(&w)));
        assert_eq!(p.heads.len(), 2);
        assert_eq!(
            p.num_trainable(),
            18 * 16 + 16 + 16 * 8 + 8 + 2 * (8 * 3 + 3)
        );
    }

    #[test]
    fn arch_validation() {
        let shape = GameShape::symmetric(2, 2).unwrap();
        let mut arch = ApproximatorArch::with_hidden(shape, vec![4, 0]);
        assert!(arch.validate().is_err());
        arch.hidden_layers = vec![4];
        arch.clip_range = (1.0, 1.0);
        assert!(arch.validate().is_err());
        arch.clip_range = (-1.0, 1.0);
        assert!(arch.validate().is_ok());
    }
}
