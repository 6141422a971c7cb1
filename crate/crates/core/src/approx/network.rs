use serde::{Deserialize, Serialize};

use super::{ApproximatorArch, ApproximatorParams, Dense};
use crate::error::{Error, Result};
use crate::game::{loss_of_vectors, subgradient_raw, Game, StrategyProfile};

/// Batch-norm behaviour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Normalize with batch statistics and record them for backward.
    Train,
    /// Normalize with the running statistics.
    Eval,
}

#[derive(Clone, Debug)]
struct LayerCache {
    /// Post-normalization, pre-ReLU values, `batch x width`.
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    /// ReLU output, `batch x width`.
    activation: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

/// Activations saved by a train-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    batch: usize,
    input: Vec<f64>,
    layers: Vec<LayerCache>,
    /// Per game, per player softmax outputs.
    outputs: Vec<Vec<Vec<f64>>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Blends this batch's statistics into the running ones.
    pub fn update_running_stats(&self, params: &mut ApproximatorParams, momentum: f64) {
        for (stats, layer) in params.running.iter_mut().zip(&self.layers) {
            for (r, b) in stats.mean.iter_mut().zip(&layer.batch_mean) {
                *r = momentum * *r + (1.0 - momentum) * b;
            }
            for (r, b) in stats.var.iter_mut().zip(&layer.batch_var) {
                *r = momentum * *r + (1.0 - momentum) * b;
            }
        }
    }
}

/// Gradients congruent with [`ApproximatorParams::trainable`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ApproximatorParams) -> Self {
        Self {
            tensors: params
                .trainable()
                .iter()
                .map(|t| vec![0.0; t.len()])
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|g| g.is_finite())
    }
}

/// `c (m x n) (+)= a (m x k) * b (k x n)` with arbitrary strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every element the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `x (batch x inputs) -> x W^T + b`.
fn affine(layer: &Dense, x: &[f64], batch: usize) -> Vec<f64> {
    let mut z = Vec::with_capacity(batch * layer.outputs);
    for _ in 0..batch {
        z.extend_from_slice(&layer.bias);
    }
    gemm(
        batch,
        layer.inputs,
        layer.outputs,
        x,
        (layer.inputs, 1),
        &layer.weight,
        (1, layer.inputs),
        &mut z,
        true,
    );
    z
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_batch(arch: &ApproximatorArch, games: &[&Game]) -> Result<()> {
    if games.is_empty() {
        return Err(Error::config("empty batch"));
    }
    if let Some(g) = games.iter().find(|g| g.shape() != &arch.shape) {
        return Err(Error::dim(format!(
            "game shape {:?} does not match approximator shape {:?}",
            g.shape().action_counts(),
            arch.shape.action_counts()
        )));
    }
    Ok(())
}

/// Runs the network on a batch.
///
/// Train mode needs at least two games (batch statistics) and returns a cache
/// for [`backward`]; it does not touch the running statistics, see
/// [`ForwardCache::update_running_stats`].
pub fn forward(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    games: &[&Game],
    mode: Mode,
) -> Result<(Vec<StrategyProfile>, Option<ForwardCache>)> {
    check_batch(arch, games)?;
    params.check_arch(arch)?;
    let batch = games.len();
    if mode == Mode::Train && batch < 2 {
        return Err(Error::config(
            "train mode needs a batch of at least 2 games",
        ));
    }
    let width = arch.input_width();
    let mut input = Vec::with_capacity(batch * width);
    for g in games {
        input.extend_from_slice(g.utilities());
    }

    let eps = arch.batchnorm_epsilon;
    let mut layers = Vec::with_capacity(params.hidden.len());
    let mut x = input.clone();
    for (l, layer) in params.hidden.iter().enumerate() {
        let out = layer.outputs;
        let z = affine(layer, &x, batch);
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; out];
                for row in z.chunks_exact(out) {
                    mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
                }
                mean.iter_mut().for_each(|m| *m /= batch as f64);
                let mut var = vec![0.0; out];
                for row in z.chunks_exact(out) {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s /= batch as f64);
                (mean, var)
            }
            Mode::Eval => (
                params.running[l].mean.clone(),
                params.running[l].var.clone(),
            ),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let mut normalized = z;
        for row in normalized.chunks_exact_mut(out) {
            for ((v, m), s) in row.iter_mut().zip(&mean).zip(&inv_std) {
                *v = (*v - m) * s;
            }
        }
        let activation: Vec<f64> = normalized.iter().map(|v| v.max(0.0)).collect();
        x = activation.clone();
        if mode == Mode::Train {
            layers.push(LayerCache {
                normalized,
                inv_std,
                activation,
                batch_mean: mean,
                batch_var: var,
            });
        }
    }

    let head_logits: Vec<Vec<f64>> = params.heads.iter().map(|h| affine(h, &x, batch)).collect();
    let outputs: Vec<Vec<Vec<f64>>> = (0..batch)
        .map(|b| {
            params
                .heads
                .iter()
                .zip(&head_logits)
                .map(|(h, z)| softmax(&z[b * h.outputs..(b + 1) * h.outputs]))
                .collect()
        })
        .collect();
    let profiles = outputs
        .iter()
        .map(|o| StrategyProfile::from_vecs_unchecked(o.clone()))
        .collect();
    let cache = (mode == Mode::Train).then_some(ForwardCache {
        version: params.version,
        batch,
        input,
        layers,
        outputs,
    });
    Ok((profiles, cache))
}

/// Eval-mode prediction for a single game.
pub fn predict(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    game: &Game,
) -> Result<StrategyProfile> {
    let (mut out, _) = forward(arch, params, &[game], Mode::Eval)?;
    Ok(out.pop().expect("one output per game"))
}

/// Mean `NashApr` of the network's outputs over the batch.
pub fn batch_loss(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    games: &[&Game],
    mode: Mode,
) -> Result<f64> {
    let (profiles, _) = forward(arch, params, games, mode)?;
    Ok(mean_loss(games, profiles.iter().map(|p| p.strategies())))
}

pub(crate) fn mean_loss<'a>(games: &[&Game], outputs: impl Iterator<Item = &'a [Vec<f64>]>) -> f64 {
    let total: f64 = games
        .iter()
        .zip(outputs)
        .map(|(g, o)| loss_of_vectors(g, o).max(0.0))
        .sum();
    total / games.len() as f64
}

/// Reverse-mode gradient of the train-mode [`batch_loss`].
///
/// Returns the gradients and the batch loss. `cache` must come from a
/// train-mode [`forward`] on the same games with the same parameters.
pub fn backward(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    games: &[&Game],
    cache: &ForwardCache,
) -> Result<(Gradients, f64)> {
    check_batch(arch, games)?;
    let batch = games.len();
    let stale = cache.version != params.version
        || cache.batch != batch
        || cache.layers.len() != params.hidden.len()
        || games
            .iter()
            .zip(cache.input.chunks_exact(arch.input_width()))
            .any(|(g, row)| g.utilities() != row);
    if stale {
        return Err(Error::Usage(
            "forward cache does not belong to these parameters and games".into(),
        ));
    }

    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    // d loss / d logits, one `batch x |A_p|` matrix per head.
    let mut head_deltas: Vec<Vec<f64>> = params
        .heads
        .iter()
        .map(|h| vec![0.0; batch * h.outputs])
        .collect();
    for (b, game) in games.iter().enumerate() {
        let sigma = &cache.outputs[b];
        let report = subgradient_raw(game, sigma);
        loss += report.value.max(0.0);
        for (p, (s, g)) in sigma.iter().zip(&report.gradient).enumerate() {
            let inner: f64 = s.iter().zip(g).map(|(x, y)| x * y).sum();
            let k = s.len();
            for a in 0..k {
                head_deltas[p][b * k + a] = scale * s[a] * (g[a] - inner);
            }
        }
    }
    loss *= scale;

    let top = params.hidden.len();
    let top_input: &[f64] = if top == 0 {
        &cache.input
    } else {
        &cache.layers[top - 1].activation
    };
    let top_width = params.heads[0].inputs;

    let mut grads = Gradients::zeros_like(params);
    let mut delta = vec![0.0; batch * top_width];
    for (p, head) in params.heads.iter().enumerate() {
        let slot = 2 * (top + p);
        let dz = &head_deltas[p];
        linear_grads(head, dz, top_input, batch, &mut grads.tensors, slot);
        gemm(
            batch,
            head.outputs,
            head.inputs,
            dz,
            (head.outputs, 1),
            &head.weight,
            (head.inputs, 1),
            &mut delta,
            true,
        );
    }

    for l in (0..top).rev() {
        let layer = &params.hidden[l];
        let lc = &cache.layers[l];
        let w = layer.outputs;
        // ReLU
        for (d, y) in delta.iter_mut().zip(&lc.normalized) {
            if *y <= 0.0 {
                *d = 0.0;
            }
        }
        // Batch norm without affine parameters.
        let mut mean_d = vec![0.0; w];
        let mut mean_dy = vec![0.0; w];
        for (row_d, row_y) in delta.chunks_exact(w).zip(lc.normalized.chunks_exact(w)) {
            for j in 0..w {
                mean_d[j] += row_d[j];
                mean_dy[j] += row_d[j] * row_y[j];
            }
        }
        mean_d.iter_mut().for_each(|m| *m *= scale);
        mean_dy.iter_mut().for_each(|m| *m *= scale);
        for (row_d, row_y) in delta.chunks_exact_mut(w).zip(lc.normalized.chunks_exact(w)) {
            for j in 0..w {
                row_d[j] = lc.inv_std[j] * (row_d[j] - mean_d[j] - row_y[j] * mean_dy[j]);
            }
        }
        let x: &[f64] = if l == 0 {
            &cache.input
        } else {
            &cache.layers[l - 1].activation
        };
        linear_grads(layer, &delta, x, batch, &mut grads.tensors, 2 * l);
        if l > 0 {
            let mut next = vec![0.0; batch * layer.inputs];
            gemm(
                batch,
                w,
                layer.inputs,
                &delta,
                (w, 1),
                &layer.weight,
                (layer.inputs, 1),
                &mut next,
                false,
            );
            delta = next;
        }
    }
    Ok((grads, loss))
}

/// Weight gradient `dz^T x` and bias gradient `sum_b dz` into `tensors[slot]`, `tensors[slot + 1]`.
fn linear_grads(
    layer: &Dense,
    dz: &[f64],
    x: &[f64],
    batch: usize,
    tensors: &mut [Vec<f64>],
    slot: usize,
) {
    let out = layer.outputs;
    gemm(
        out,
        batch,
        layer.inputs,
        dz,
        (1, out),
        x,
        (layer.inputs, 1),
        &mut tensors[slot],
        false,
    );
    let db = &mut tensors[slot + 1];
    db.iter_mut().for_each(|v| *v = 0.0);
    for row in dz.chunks_exact(out) {
        db.iter_mut().zip(row).for_each(|(d, v)| *d += v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{nash_apr, GameShape};
    use crate::gen::{generate, GameClass, GeneratorSpec};
    use crate::rng;

    fn games(class: GameClass, k: usize, count: usize) -> Vec<Game> {
        let spec = GeneratorSpec::new(class, GameShape::symmetric(2, k).unwrap(), 5).unwrap();
        generate(&spec, count).unwrap().games
    }

    #[test]
    fn outputs_are_valid_profiles() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 4).unwrap(), vec![8, 6]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(1, 0)).unwrap();
        let gs = games(GameClass::MajorityVoting, 4, 5);
        let refs: Vec<&Game> = gs.iter().collect();
        for mode in [Mode::Train, Mode::Eval] {
            let (out, _) = forward(&arch, &params, &refs, mode).unwrap();
            for p in out {
                assert!(StrategyProfile::new(p.into_strategies()).is_ok());
            }
        }
    }

    #[test]
    fn zero_heads_give_uniform_output() {
        let arch = ApproximatorArch::with_hidden(GameShape::new(vec![3, 2]).unwrap(), vec![4]);
        let mut params = ApproximatorParams::init(&arch, &mut rng::stream(1, 0)).unwrap();
        for h in &mut params.heads {
            h.weight.iter_mut().for_each(|w| *w = 0.0);
            h.bias.iter_mut().for_each(|w| *w = 0.0);
        }
        let g = Game::new(arch.shape.clone(), vec![0.3; 12]).unwrap();
        let p = predict(&arch, &params, &g).unwrap();
        assert_eq!(p.player(0), &[1.0 / 3.0; 3]);
        assert_eq!(p.player(1), &[0.5; 2]);
    }

    #[test]
    fn eval_output_is_batch_invariant() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 3).unwrap(), vec![7]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(2, 0)).unwrap();
        let gs = games(GameClass::WarOfAttrition, 3, 6);
        let refs: Vec<&Game> = gs.iter().collect();
        let (batched, _) = forward(&arch, &params, &refs, Mode::Eval).unwrap();
        for (g, b) in gs.iter().zip(&batched) {
            let alone = predict(&arch, &params, g).unwrap();
            for (x, y) in alone.flatten().iter().zip(b.flatten()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn batch_errors() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 3).unwrap(), vec![4]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(2, 0)).unwrap();
        let gs = games(GameClass::WarOfAttrition, 3, 2);
        assert!(matches!(
            forward(&arch, &params, &[&gs[0]], Mode::Train),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            batch_loss(&arch, &params, &[], Mode::Eval),
            Err(Error::Config(_))
        ));
        let other = games(GameClass::WarOfAttrition, 4, 1);
        assert!(matches!(
            forward(&arch, &params, &[&other[0]], Mode::Eval),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn single_game_loss_is_its_nash_apr() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 3).unwrap(), vec![4]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(3, 0)).unwrap();
        let g = &games(GameClass::GrabTheDollar, 3, 1)[0];
        let p = predict(&arch, &params, g).unwrap();
        let l = batch_loss(&arch, &params, &[g], Mode::Eval).unwrap();
        assert_eq!(l, nash_apr(&p, g).unwrap());
        assert!((0.0..=1.0).contains(&l));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 3).unwrap(), vec![4]);
        let mut params = ApproximatorParams::init(&arch, &mut rng::stream(3, 0)).unwrap();
        let gs = games(GameClass::GrabTheDollar, 3, 4);
        let refs: Vec<&Game> = gs.iter().collect();
        let (_, cache) = forward(&arch, &params, &refs[..2], Mode::Train).unwrap();
        let cache = cache.unwrap();
        assert!(backward(&arch, &params, &refs[..2], &cache).is_ok());
        assert!(matches!(
            backward(&arch, &params, &refs[2..], &cache),
            Err(Error::Usage(_))
        ));
        params.version += 1;
        assert!(matches!(
            backward(&arch, &params, &refs[..2], &cache),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn duplicated_batch_has_the_same_gradient() {
        let arch = ApproximatorArch::with_hidden(GameShape::symmetric(2, 3).unwrap(), vec![5]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(4, 0)).unwrap();
        let gs = games(GameClass::BertrandOligopoly, 3, 3);
        let once: Vec<&Game> = gs.iter().collect();
        let twice: Vec<&Game> = gs.iter().chain(&gs).collect();
        let grad = |batch: &[&Game]| {
            let (_, cache) = forward(&arch, &params, batch, Mode::Train).unwrap();
            backward(&arch, &params, batch, &cache.unwrap()).unwrap()
        };
        let (a, la) = grad(&once);
        let (b, lb) = grad(&twice);
        assert!((la - lb).abs() < 1e-14);
        for (x, y) in a.tensors.iter().flatten().zip(b.tensors.iter().flatten()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }

    fn finite_difference_check(
        arch: &ApproximatorArch,
        params: &ApproximatorParams,
        batch: &[&Game],
    ) {
        let (out, cache) = forward(arch, params, batch, Mode::Train).unwrap();
        for (g, p) in batch.iter().zip(&out) {
            assert!(!subgradient_raw(g, p.strategies()).tie_flag);
        }
        let (grads, _) = backward(arch, params, batch, &cache.unwrap()).unwrap();
        let h = 1e-6;
        let loss_at = |t: usize, i: usize, delta: f64| {
            let mut moved = params.clone();
            moved.trainable_slices_mut()[t][i] += delta;
            batch_loss(arch, &moved, batch, Mode::Train).unwrap()
        };
        for (t, tensor) in grads.tensors.iter().enumerate() {
            for (i, &an) in tensor.iter().enumerate() {
                let fd = (loss_at(t, i, h) - loss_at(t, i, -h)) / (2.0 * h);
                // Hidden biases sit right before batch norm and have exactly
                // zero gradient; the floor keeps rounding noise from counting.
                let scale = fd.abs().max(an.abs()).max(1e-6);
                assert!(
                    (fd - an).abs() / scale < 1e-3,
                    "tensor {t} entry {i}: {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn tiny_network_gradient_matches_finite_differences() {
        let shape = GameShape::symmetric(2, 2).unwrap();
        for (hidden, seed) in [(vec![1], 0), (vec![2], 1), (vec![1], 2)] {
            let arch = ApproximatorArch::with_hidden(shape.clone(), hidden);
            let params = ApproximatorParams::init(&arch, &mut rng::stream(seed, 9)).unwrap();
            assert!(params.num_trainable() <= 50);
            let mut r = rng::stream(seed, 10);
            let gs: Vec<Game> = (0..4)
                .map(|_| {
                    Game::new(
                        shape.clone(),
                        (0..8).map(|_| rand::Rng::gen(&mut r)).collect(),
                    )
                    .unwrap()
                })
                .collect();
            let batch: Vec<&Game> = gs.iter().collect();
            finite_difference_check(&arch, &params, &batch);
        }
    }

    #[test]
    fn indifferent_games_give_zero_gradient() {
        // Each player's payoff ignores their own action, so every output is an
        // equilibrium and the loss is identically zero.
        let shape = GameShape::symmetric(2, 3).unwrap();
        let mut r = rng::stream(6, 0);
        let gs: Vec<Game> = (0..5)
            .map(|_| {
                let row: Vec<f64> = (0..3).map(|_| rand::Rng::gen(&mut r)).collect();
                let col: Vec<f64> = (0..3).map(|_| rand::Rng::gen(&mut r)).collect();
                Game::from_fn(
                    shape.clone(),
                    |p, a| if p == 0 { row[a[1]] } else { col[a[0]] },
                )
                .unwrap()
            })
            .collect();
        let batch: Vec<&Game> = gs.iter().collect();
        let arch = ApproximatorArch::with_hidden(shape, vec![4]);
        let params = ApproximatorParams::init(&arch, &mut rng::stream(6, 1)).unwrap();
        let (_, cache) = forward(&arch, &params, &batch, Mode::Train).unwrap();
        let (grads, loss) = backward(&arch, &params, &batch, &cache.unwrap()).unwrap();
        assert!(loss.abs() < 1e-15);
        assert!(grads.tensors.iter().flatten().all(|g| g.abs() < 1e-14));
        let h = 1e-4;
        for t in 0..grads.tensors.len() {
            let mut moved = params.clone();
            moved.trainable_slices_mut()[t][0] += h;
            assert!(
                batch_loss(&arch, &moved, &batch, Mode::Train)
                    .unwrap()
                    .abs()
                    < 1e-15
            );
        }
    }
}
