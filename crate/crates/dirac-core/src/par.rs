//! Site-parallel map primitives.
//!
//! Every data-parallel loop in the crate goes through [`map_sites`] so that
//! the `parallel` feature swaps the execution strategy in exactly one place.
//! Order is preserved in both strategies and reductions elsewhere in the
//! crate are always sequential, so results are bit-identical with the
//! feature on or off and independent of the worker count.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_sites<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_sites<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation, always available; the benchmark
/// compares it against the feature-selected [`map_sites`].
pub fn map_sites_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
