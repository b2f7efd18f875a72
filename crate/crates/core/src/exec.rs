//! Dispatch between the rayon data-parallel path and the sequential
//! fallback.
//!
//! The crate's heavy loops (exhaustive dataset sweeps, capture-test batches,
//! randomised trials) funnel through the helpers here. With the `parallel`
//! feature (default) they run on rayon when [`ExecMode::Parallel`] is
//! selected; without the feature both modes run the sequential code, so the
//! public API is identical either way. Results are deterministic in both
//! modes: searches return the match with the least index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for sweep-style operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Single-threaded reference path.
    Sequential,
    /// Rayon work-stealing path; equals `Sequential` when the crate is built
    /// without the `parallel` feature.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        ExecMode::Parallel
    }
}

/// First `f(i)` over `0..n` that is `Some`, by least `i`.
pub(crate) fn find_first_map<T: Send>(
    mode: ExecMode,
    n: u64,
    f: impl Fn(u64) -> Option<T> + Sync,
) -> Option<T> {
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        return (0..n).into_par_iter().find_map_first(|i| f(i));
    }
    let _ = mode;
    (0..n).find_map(f)
}

/// Keep the items satisfying `keep`, preserving order.
pub(crate) fn retain_filter<T: Send + Sync>(
    mode: ExecMode,
    items: Vec<T>,
    keep: impl Fn(&T) -> bool + Sync,
) -> Vec<T> {
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        return items.into_par_iter().filter(|t| keep(t)).collect();
    }
    let _ = mode;
    items.into_iter().filter(|t| keep(t)).collect()
}
