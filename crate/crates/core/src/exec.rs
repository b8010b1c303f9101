//! Data-parallel loop helpers with a sequential fallback.
//!
//! Every parallel section in the crate goes through one of these
//! functions. They only ever hand out disjoint chunks of the output (or
//! collect results indexed by input position), so the numerical result
//! is bitwise identical whether the `parallel` feature is on or off and
//! for any rayon thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to consecutive `chunk`-sized pieces of `data`, passing the
/// chunk index. `data.len()` must be a multiple of `chunk`.
pub(crate) fn for_each_chunk_mut<F>(data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert_eq!(data.len() % chunk.max(1), 0);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Maps `f` over `0..n`, preserving index order in the returned vector.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return (0..n).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..n).map(f).collect();
}

/// Runs `f` inside a dedicated pool of the given size, so a caller can
/// pin a section to one thread (or to an explicit count) regardless of
/// the global pool. Without the `parallel` feature the closure simply
/// runs on the current thread.
#[allow(unused_variables)]
pub(crate) fn with_thread_count<T, F>(threads: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    f()
}
