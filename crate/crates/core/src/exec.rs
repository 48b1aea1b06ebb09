//! Work-item execution: data-parallel over replications/windows when the
//! `parallel` feature is enabled, plain sequential otherwise.
//!
//! Results are always assembled in item order and every item derives its own
//! RNG stream from the item index, so output is identical at any thread count.

/// Map `f` over `0..n`, preserving order.
///
/// `threads == 1` forces the sequential path even in parallel builds;
/// `threads == 0` uses all available cores.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    if threads == 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads) // 0 means "all available" to rayon as well
        .build()
        .expect("failed to build worker pool");
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let out = map_indexed(100, 0, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let seq = map_indexed(64, 1, |i| (i as f64).sqrt());
        let par = map_indexed(64, 4, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
    }
}
