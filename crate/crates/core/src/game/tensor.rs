//! Axis contractions of row-major payoff tensors against strategy vectors.

/// Contracts `axis` of a row-major tensor with extents `dims` against `weights`.
pub(crate) fn contract_axis(
    tensor: &[f64],
    dims: &[usize],
    axis: usize,
    weights: &[f64],
) -> Vec<f64> {
    let extent = dims[axis];
    debug_assert_eq!(weights.len(), extent);
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![0.0; outer * inner];
    if inner == 1 {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &tensor[o * extent..(o + 1) * extent];
            *slot = row.iter().zip(weights).map(|(t, w)| t * w).sum();
        }
    } else {
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (a, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &tensor[(o * extent + a) * inner..(o * extent + a + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }
    out
}

/// Contracts every axis except `keep`, leaving a vector of length `dims[keep]`.
///
/// Axes are contracted from the last to the first so the cost is dominated by
/// the first pass, `O(|A|)`.
pub(crate) fn contract_all_but<S: AsRef<[f64]>>(
    tensor: &[f64],
    dims: &[usize],
    strategies: &[S],
    keep: usize,
) -> Vec<f64> {
    let mut dims = dims.to_vec();
    let mut current: Option<Vec<f64>> = None;
    for axis in (0..dims.len()).rev() {
        if axis == keep {
            continue;
        }
        let src = current.as_deref().unwrap_or(tensor);
        let next = contract_axis(src, &dims, axis, strategies[axis].as_ref());
        dims.remove(axis);
        current = Some(next);
    }
    current.unwrap_or_else(|| tensor.to_vec())
}

/// Fixes `axis` at index `at`, dropping that axis.
pub(crate) fn slice_axis(tensor: &[f64], dims: &[usize], axis: usize, at: usize) -> Vec<f64> {
    let extent = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        let start = (o * extent + at) * inner;
        out.extend_from_slice(&tensor[start..start + inner]);
    }
    out
}
