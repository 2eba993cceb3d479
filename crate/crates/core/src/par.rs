//! Index-ordered parallel map. Results always come back in index order, so
//! any later reduction is independent of the thread count.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Map over `n` items in fixed-size chunks; the per-chunk closure may keep scratch state.
pub(crate) fn map_chunked<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> Vec<T> + Sync + Send,
{
    let chunks = n.div_ceil(chunk);
    map_indexed(chunks, |c| f(c * chunk..((c + 1) * chunk).min(n)))
        .into_iter()
        .flatten()
        .collect()
}
