//! Model files.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "NEA1", u16 version
//! u16 n, u32 * n action counts
//! u32 hidden layer count, u32 * count widths
//! f64 batch-norm epsilon, f64 momentum, f64 clip low, f64 clip high
//! f64 tensors: per hidden layer weight, bias, running mean, running var;
//!              per head weight, bias
//! u8 optimizer flag; when 1:
//!   u64 step, f64 learning rate, beta1, beta2, epsilon,
//!   first moments then second moments, in trainable order
//! ```

use std::fs;
use std::path::Path;

use super::{AdamState, ApproximatorArch, ApproximatorParams};
use crate::error::{Error, Result};
use crate::game::GameShape;
use crate::gen::io::Reader;

pub const MODEL_MAGIC: &[u8; 4] = b"NEA1";
pub const MODEL_VERSION: u16 = 1;

/// Everything stored in a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub arch: ApproximatorArch,
    pub params: ApproximatorParams,
    pub adam: Option<AdamState>,
}

impl ModelFile {
    /// Rejects a file whose architecture differs from `expected`.
    pub fn expect_arch(&self, expected: &ApproximatorArch) -> Result<()> {
        if &self.arch != expected {
            return Err(Error::format(
                0,
                format!(
                    "model architecture {:?} differs from expected {:?}",
                    self.arch, expected
                ),
            ));
        }
        Ok(())
    }
}

pub fn save_model(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    adam: Option<&AdamState>,
    path: impl AsRef<Path>,
) -> Result<()> {
    params.check_arch(arch)?;
    fs::write(path, encode(arch, params, adam))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    decode(&fs::read(path)?)
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn encode(
    arch: &ApproximatorArch,
    params: &ApproximatorParams,
    adam: Option<&AdamState>,
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(arch.shape.num_players() as u16).to_le_bytes());
    for &k in arch.shape.action_counts() {
        out.extend_from_slice(&(k as u32).to_le_bytes());
    }
    out.extend_from_slice(&(arch.hidden_layers.len() as u32).to_le_bytes());
    for &w in &arch.hidden_layers {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    put_f64s(
        &mut out,
        &[
            arch.batchnorm_epsilon,
            arch.bn_momentum,
            arch.clip_range.0,
            arch.clip_range.1,
        ],
    );
    for (layer, stats) in params.hidden.iter().zip(&params.running) {
        put_f64s(&mut out, &layer.weight);
        put_f64s(&mut out, &layer.bias);
        put_f64s(&mut out, &stats.mean);
        put_f64s(&mut out, &stats.var);
    }
    for head in &params.heads {
        put_f64s(&mut out, &head.weight);
        put_f64s(&mut out, &head.bias);
    }
    match adam {
        None => out.push(0),
        Some(a) => {
            out.push(1);
            out.extend_from_slice(&a.step.to_le_bytes());
            put_f64s(&mut out, &[a.learning_rate, a.beta1, a.beta2, a.epsilon]);
            for t in a.first_moment.iter().chain(&a.second_moment) {
                put_f64s(&mut out, t);
            }
        }
    }
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != MODEL_MAGIC {
        return Err(Error::format(0, "bad magic, expected NEA1"));
    }
    let at = r.offset();
    let version = r.u16("version")?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            at,
            format!("unsupported model version {version}"),
        ));
    }
    let at = r.offset();
    let n = r.u16("player count")? as usize;
    let counts = (0..n)
        .map(|_| r.u32("action count").map(|k| k as usize))
        .collect::<Result<Vec<_>>>()?;
    let shape = GameShape::new(counts).map_err(|e| Error::format(at, e))?;
    let layers = r.u32("layer count")? as usize;
    let hidden = (0..layers)
        .map(|_| r.u32("layer width").map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let at = r.offset();
    let arch = ApproximatorArch {
        shape,
        hidden_layers: hidden,
        batchnorm_epsilon: r.f64("epsilon")?,
        bn_momentum: r.f64("momentum")?,
        clip_range: (r.f64("clip low")?, r.f64("clip high")?),
    };
    arch.validate().map_err(|e| Error::format(at, e))?;

    let mut params = ApproximatorParams::zeros(&arch);
    for (layer, stats) in params.hidden.iter_mut().zip(params.running.iter_mut()) {
        layer.weight = r.f64s(layer.weight.len(), "weights")?;
        layer.bias = r.f64s(layer.bias.len(), "biases")?;
        stats.mean = r.f64s(stats.mean.len(), "running mean")?;
        stats.var = r.f64s(stats.var.len(), "running variance")?;
    }
    for head in &mut params.heads {
        head.weight = r.f64s(head.weight.len(), "head weights")?;
        head.bias = r.f64s(head.bias.len(), "head biases")?;
    }
    let at = r.offset();
    let adam = match r.u8("optimizer flag")? {
        0 => None,
        1 => {
            let mut a = AdamState::new(&params, 0.0);
            a.step = r.u64("optimizer step")?;
            a.learning_rate = r.f64("learning rate")?;
            a.beta1 = r.f64("beta1")?;
            a.beta2 = r.f64("beta2")?;
            a.epsilon = r.f64("adam epsilon")?;
            for t in a.first_moment.iter_mut().chain(a.second_moment.iter_mut()) {
                *t = r.f64s(t.len(), "optimizer moments")?;
            }
            Some(a)
        }
        other => return Err(Error::format(at, format!("bad optimizer flag {other}"))),
    };
    if !r.at_end() {
        return Err(Error::format(r.offset(), "trailing bytes"));
    }
    Ok(ModelFile { arch, params, adam })
}
