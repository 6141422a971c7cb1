use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adam_step, backward, forward, AdamState, ApproximatorArch, ApproximatorParams, Mode};
use crate::error::{Error, Result};
use crate::game::{loss_of_vectors, Game};
use crate::gen::{Dataset, SplitKind};
use crate::rng;

const INIT_STREAM: u64 = 1;
const SAMPLER_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Validation loss is logged every this many steps; 0 disables it.
    pub validation_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            validation_interval: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::config(
                "batch size must be at least 2 (batch normalization)",
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

impl TrainLog {
    /// `step,train_loss,val_loss`; the last column is empty between validations.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,train_loss,val_loss")?;
        for r in &self.rows {
            match r.val_loss {
                Some(v) => writeln!(out, "{},{},{}", r.step, r.train_loss, v)?,
                None => writeln!(out, "{},{},", r.step, r.train_loss)?,
            }
        }
        Ok(())
    }
}

/// Seeded minibatches over the training split, reshuffled every epoch.
///
/// Batch `s` is a pure function of `(seed, s)`: positions `s * B .. (s + 1) * B`
/// of the concatenation of per-epoch permutations.
#[derive(Clone, Debug)]
pub struct MinibatchSampler {
    seed: u64,
    pool: Vec<usize>,
    batch_size: usize,
    cached: Option<(usize, Vec<usize>)>,
}

impl MinibatchSampler {
    pub fn new(seed: u64, pool: Vec<usize>, batch_size: usize) -> Self {
        Self {
            seed,
            pool,
            batch_size,
            cached: None,
        }
    }

    fn epoch(&mut self, e: usize) -> &[usize] {
        if self.cached.as_ref().map(|c| c.0) != Some(e) {
            let mut perm = self.pool.clone();
            perm.shuffle(&mut rng::stream(
                rng::derive_seed(self.seed, SAMPLER_STREAM),
                e as u64,
            ));
            self.cached = Some((e, perm));
        }
        &self.cached.as_ref().expect("just filled").1
    }

    pub fn batch(&mut self, step: usize) -> Vec<usize> {
        let n = self.pool.len();
        (step * self.batch_size..(step + 1) * self.batch_size)
            .map(|pos| self.epoch(pos / n)[pos % n])
            .collect()
    }
}

/// Stepwise minibatch training loop; resumable from a checkpoint.
pub struct Trainer<'a> {
    pub arch: ApproximatorArch,
    pub params: ApproximatorParams,
    pub adam: AdamState,
    cfg: TrainConfig,
    dataset: &'a Dataset,
    sampler: MinibatchSampler,
    pub log: TrainLog,
}

impl<'a> Trainer<'a> {
    pub fn new(arch: ApproximatorArch, dataset: &'a Dataset, cfg: TrainConfig) -> Result<Self> {
        let params = ApproximatorParams::init(
            &arch,
            &mut rng::stream(rng::derive_seed(cfg.seed, INIT_STREAM), 0),
        )?;
        let adam = AdamState::new(&params, cfg.learning_rate);
        Self::resume(arch, dataset, cfg, params, adam)
    }

    /// Continues from saved parameters and optimizer state; the next batch is
    /// the one for step `adam.step`.
    pub fn resume(
        arch: ApproximatorArch,
        dataset: &'a Dataset,
        cfg: TrainConfig,
        params: ApproximatorParams,
        adam: AdamState,
    ) -> Result<Self> {
        cfg.validate()?;
        arch.validate()?;
        params.check_arch(&arch)?;
        if dataset.spec.shape != arch.shape {
            return Err(Error::dim("dataset shape does not match the architecture"));
        }
        if dataset.split.train.is_empty() {
            return Err(Error::config("training split is empty"));
        }
        let sampler = MinibatchSampler::new(cfg.seed, dataset.split.train.clone(), cfg.batch_size);
        Ok(Self {
            arch,
            params,
            adam,
            cfg,
            dataset,
            sampler,
            log: TrainLog::default(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.adam.step as usize
    }

    /// One minibatch step; returns the train-mode batch loss before the update.
    pub fn step(&mut self) -> Result<f64> {
        let step = self.steps_done();
        let batch: Vec<&Game> = self
            .sampler
            .batch(step)
            .into_iter()
            .map(|i| &self.dataset.games[i])
            .collect();
        let (_, cache) = forward(&self.arch, &self.params, &batch, Mode::Train)?;
        let cache = cache.expect("train mode returns a cache");
        let (grads, loss) = backward(&self.arch, &self.params, &batch, &cache)?;
        cache.update_running_stats(&mut self.params, self.arch.bn_momentum);
        adam_step(&self.arch, &mut self.params, &grads, &mut self.adam)?;

        let done = step + 1;
        let val_loss = if self.cfg.validation_interval > 0
            && done.is_multiple_of(self.cfg.validation_interval)
            && !self.dataset.split.validation.is_empty()
        {
            let val = self.dataset.split_games(SplitKind::Validation);
            Some(evaluate(&self.arch, &self.params, &val)?.0)
        } else {
            None
        };
        self.log.rows.push(TrainLogRow {
            step: done,
            train_loss: loss,
            val_loss,
        });
        Ok(loss)
    }

    /// Runs until `cfg.iterations` steps have been taken in total.
    pub fn run(&mut self) -> Result<()> {
        while self.steps_done() < self.cfg.iterations {
            self.step()?;
        }
        Ok(())
    }
}

/// Initializes and trains for `cfg.iterations` steps.
pub fn train(
    arch: &ApproximatorArch,
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<(ApproximatorParams, TrainLog)> {
    let mut trainer = Trainer::new(arch.clone(), dataset, cfg.clone())?;
    trainer.run()?;
    Ok((trainer.params, trainer.log))
}

const EVAL_CHUNK: usize = 256;

/// Mean and population standard deviation of eval-mode `NashApr` over `games`.
pub fn evaluate(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    games: &[&Game],
) -> Result<(f64, f64)> {
    if games.is_empty() {
        return Err(Error::config("cannot evaluate on an empty split"));
    }
    let mut losses = Vec::with_capacity(games.len());
    for chunk in games.chunks(EVAL_CHUNK) {
        let (out, _) = forward(arch, params, chunk, Mode::Eval)?;
        for (g, p) in chunk.iter().zip(&out) {
            losses.push(loss_of_vectors(g, p.strategies()).max(0.0));
        }
    }
    Ok(mean_std(&losses))
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameShape;
    use crate::gen::{generate, GameClass, GeneratorSpec};

    fn dataset(count: usize) -> Dataset {
        let spec = GeneratorSpec::new(
            GameClass::MajorityVoting,
            GameShape::symmetric(2, 3).unwrap(),
            11,
        )
        .unwrap();
        generate(&spec, count).unwrap()
    }

    fn small_cfg(iterations: usize) -> TrainConfig {
        TrainConfig {
            iterations,
            batch_size: 8,
            learning_rate: 1e-2,
            seed: 3,
            validation_interval: 5,
        }
    }

    #[test]
    fn sampler_reshuffles_and_covers_each_epoch() {
        let mut s = MinibatchSampler::new(1, (0..10).collect(), 5);
        let mut first: Vec<usize> = s.batch(0).into_iter().chain(s.batch(1)).collect();
        let mut second: Vec<usize> = s.batch(2).into_iter().chain(s.batch(3)).collect();
        assert_ne!(first, second);
        first.sort_unstable();
        second.sort_unstable();
        assert_eq!(first, (0..10).collect::<Vec<_>>());
        assert_eq!(second, first);
        let mut fresh = MinibatchSampler::new(1, (0..10).collect(), 5);
        assert_eq!(fresh.batch(3), s.batch(3));
    }

    #[test]
    fn zero_iterations_returns_initial_params() {
        let ds = dataset(40);
        let arch = ApproximatorArch::with_hidden(ds.spec.shape.clone(), vec![8]);
        let (params, log) = train(&arch, &ds, &small_cfg(0)).unwrap();
        let init = Trainer::new(arch, &ds, small_cfg(0)).unwrap().params;
        assert_eq!(params, init);
        assert!(log.rows.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = dataset(40);
        let arch = ApproximatorArch::with_hidden(ds.spec.shape.clone(), vec![8]);
        let (a, la) = train(&arch, &ds, &small_cfg(12)).unwrap();
        let (b, lb) = train(&arch, &ds, &small_cfg(12)).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.rows.len(), 12);
        assert!(la.rows[4].val_loss.is_some() && la.rows[3].val_loss.is_none());
        assert!(la.rows.iter().all(|r| (0.0..=1.0).contains(&r.train_loss)));
    }

    #[test]
    fn resume_reproduces_the_trajectory() {
        let ds = dataset(40);
        let arch = ApproximatorArch::with_hidden(ds.spec.shape.clone(), vec![8]);
        let (full, _) = train(&arch, &ds, &small_cfg(10)).unwrap();
        let mut first = Trainer::new(arch.clone(), &ds, small_cfg(4)).unwrap();
        first.run().unwrap();
        let mut rest = Trainer::resume(arch, &ds, small_cfg(10), first.params, first.adam).unwrap();
        rest.run().unwrap();
        assert_eq!(rest.params, full);
    }

    #[test]
    fn empty_train_split_is_rejected() {
        let ds = dataset(40).with_tail_split(20, 20).unwrap();
        let arch = ApproximatorArch::with_hidden(ds.spec.shape.clone(), vec![8]);
        assert!(matches!(
            train(&arch, &ds, &small_cfg(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn evaluate_identical_games_has_zero_std() {
        let ds = dataset(1);
        let arch = ApproximatorArch::with_hidden(ds.spec.shape.clone(), vec![4]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(0, 0)).unwrap();
        let games = vec![&ds.games[0]; 5];
        let (mean, std) = evaluate(&arch, &params, &games).unwrap();
        assert!(std < 1e-15);
        assert!((0.0..=1.0).contains(&mean));
        assert!(evaluate(&arch, &params, &[]).is_err());
    }

    #[test]
    fn log_csv_layout() {
        let log = TrainLog {
            rows: vec![
                TrainLogRow {
                    step: 1,
                    train_loss: 0.5,
                    val_loss: None,
                },
                TrainLogRow {
                    step: 2,
                    train_loss: 0.25,
                    val_loss: Some(0.125),
                },
            ],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,train_loss,val_loss\n1,0.5,\n2,0.25,0.125\n"
        );
    }
}
