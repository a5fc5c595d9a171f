//! Deterministic chunked parallelism.
//!
//! Work is always split into the same fixed-size chunks and partial results
//! are combined in chunk order, so outputs are bit-identical for any worker
//! count (including the sequential build without the `parallel` feature).

use alloc::vec::Vec;

/// Paths per chunk for reductions and per-path kernels.
pub(crate) const CHUNK: usize = 2048;

/// Maps `f` over chunk indices `0..n_chunks` and returns results in order.
pub(crate) fn map_chunks<R, F>(n_chunks: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(f).collect()
    }
}

/// Maps `f(index, item)` over mutable items and returns results in order.
pub(crate) fn map_slots<T, R, F>(items: &mut [T], f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

pub(crate) fn n_chunks(len: usize, chunk: usize) -> usize {
    len.div_ceil(chunk)
}
