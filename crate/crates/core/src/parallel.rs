//! Thread-count control for embarrassingly parallel loops over games.
//!
//! `NASHAPR_THREADS` selects the worker count. `0` means strict
//! single-threaded execution on the calling thread; unset means rayon's
//! default. Results are always collected in index order, so reductions done
//! by the caller are identical in every mode.

use rayon::prelude::*;

pub const THREADS_ENV: &str = "NASHAPR_THREADS";

/// Configured worker count; `None` when the variable is unset or unparsable.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

/// Maps `f` over `0..len`, returning results in index order.
pub fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match configured_threads() {
        Some(0) => (0..len).map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| (0..len).into_par_iter().map(&f).collect()),
            Err(_) => (0..len).map(f).collect(),
        },
        None => (0..len).into_par_iter().map(f).collect(),
    }
}
