//! Deterministic data-parallel helpers.
//!
//! Work is split into fixed-size chunks; chunk results come back in index order and
//! are combined sequentially by the caller, so floating-point sums do not depend on
//! the thread count or on whether rayon is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) const CHUNK: usize = 512;

/// Maps `f` over `0..n`, preserving order.
pub(crate) fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Maps `f` over a slice, preserving order.
pub(crate) fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
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

/// Folds each chunk of `0..n` into its own accumulator; accumulators are returned in
/// chunk order.
pub(crate) fn fold_chunks<A, I, F>(n: usize, chunk: usize, init: I, fold: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    map_range(n_chunks, |c| {
        let mut acc = init();
        let end = ((c + 1) * chunk).min(n);
        for i in c * chunk..end {
            fold(&mut acc, i);
        }
        acc
    })
}

/// Minimum of `f` over `0..n` (NaN-free inputs assumed); `+∞` when `n == 0`.
pub(crate) fn min_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    fold_chunks(n, CHUNK, || f64::INFINITY, |m, i| *m = m.min(f(i)))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Maximum of `f` over `0..n`; `-∞` when `n == 0`.
pub(crate) fn max_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    fold_chunks(n, CHUNK, || f64::NEG_INFINITY, |m, i| *m = m.max(f(i)))
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sum of `f` over `0..n` with a fixed summation order.
pub(crate) fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    fold_chunks(n, CHUNK, || 0.0, |s, i| *s += f(i))
        .into_iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential() {
        let n = 10_007;
        let seq: f64 = {
            let parts: Vec<f64> = (0..n)
                .collect::<Vec<_>>()
                .chunks(CHUNK)
                .map(|c| c.iter().map(|&i| (i as f64).sqrt()).sum())
                .collect();
            parts.into_iter().sum()
        };
        assert_eq!(sum_range(n, |i| (i as f64).sqrt()), seq);
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(min_range(0, |_| 0.0), f64::INFINITY);
        assert_eq!(max_range(0, |_| 0.0), f64::NEG_INFINITY);
        assert_eq!(sum_range(0, |_| 1.0), 0.0);
    }
}
