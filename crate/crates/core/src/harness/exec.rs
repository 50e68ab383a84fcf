//! Sample-level work distribution.
//!
//! Every sample owns its random streams (see [`crate::rng`]), so the
//! executor only has to hand out indices and return results in index
//! order. With the `parallel` feature the indices are spread over a rayon
//! pool; without it, or with one worker, they run in a plain loop.

/// Environment variable consulted for the worker count when neither the
/// config nor the command line sets one.
pub const THREADS_ENV: &str = "DWT_THREADS";

/// Worker count: the explicit value, else `DWT_THREADS`, else the
/// available parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .filter(|&t| t > 0)
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&t| t > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// `(0..count).map(f)` with results in index order.
pub fn map_samples<T, F>(count: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to start worker pool");
        return pool.install(|| (0..count).into_par_iter().map(&f).collect());
    }
    let _ = threads;
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_samples(1000, 1, |i| i * i);
        let par = map_samples(1000, 4, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 999 * 999);
    }

    #[test]
    fn explicit_threads_win() {
        assert_eq!(resolve_threads(Some(3)), 3);
        assert!(resolve_threads(None) >= 1);
    }
}
