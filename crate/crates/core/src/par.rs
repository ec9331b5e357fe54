//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! the same closures on plain iterators. Helpers only ever *map* in parallel;
//! floating-point reductions are done afterwards, in index order, over
//! fixed-size chunks, so the two builds agree bit for bit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by [`chunked_sum`] and friends. Fixed so the summation
/// tree does not depend on the number of worker threads.
pub const REDUCE_CHUNK: usize = 4096;

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Number of worker threads the parallel helpers will use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// `(0..n).map(f).collect()`, in parallel when enabled. Output order is the
/// index order either way.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Fallible variant of [`map_range`]; the first error in index order wins.
pub fn try_map_range<T, F>(n: usize, f: F) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> crate::Result<T> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}

/// Map each fixed-size chunk of `data` to a partial value, in parallel when
/// enabled, and return the partials in chunk order.
pub fn map_chunks<S, T, F>(data: &[S], chunk: usize, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(usize, &[S]) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        if data.len() > chunk {
            return data
                .par_chunks(chunk)
                .enumerate()
                .map(|(i, c)| f(i * chunk, c))
                .collect();
        }
    }
    data.chunks(chunk)
        .enumerate()
        .map(|(i, c)| f(i * chunk, c))
        .collect()
}

/// Deterministic sum of `f` over `data`, chunked by [`REDUCE_CHUNK`].
pub fn chunked_sum<S, F>(data: &[S], f: F) -> f64
where
    S: Sync,
    F: Fn(usize, &S) -> f64 + Sync + Send,
{
    map_chunks(data, REDUCE_CHUNK, |base, c| {
        c.iter()
            .enumerate()
            .fold(0.0, |acc, (k, s)| acc + f(base + k, s))
    })
    .into_iter()
    .sum()
}

/// Apply `f` to every mutable chunk of `data`. Chunks are disjoint so the
/// result does not depend on scheduling.
pub fn for_each_chunk_mut<S, F>(data: &mut [S], chunk: usize, f: F)
where
    S: Send,
    F: Fn(usize, &mut [S]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        if data.len() > chunk {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i * chunk, c));
            return;
        }
    }
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        f(i * chunk, c);
    }
}

/// Apply `f(offset, lo_chunk, hi_chunk)` to matching `chunk`-sized pieces of
/// two equal-length mutable slices; `offset` is the piece's start index.
pub fn for_each_zip_chunk_mut<S, F>(lo: &mut [S], hi: &mut [S], chunk: usize, f: F)
where
    S: Send,
    F: Fn(usize, &mut [S], &mut [S]) + Sync + Send,
{
    debug_assert_eq!(lo.len(), hi.len());
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        if lo.len() > chunk {
            lo.par_chunks_mut(chunk)
                .zip(hi.par_chunks_mut(chunk))
                .enumerate()
                .for_each(|(c, (l, h))| f(c * chunk, l, h));
            return;
        }
    }
    for (c, (l, h)) in lo.chunks_mut(chunk).zip(hi.chunks_mut(chunk)).enumerate() {
        f(c * chunk, l, h);
    }
}
