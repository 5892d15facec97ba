//! Execution strategy for independent work items.
//!
//! With the `parallel` feature (on by default) work items are farmed out to
//! rayon; without it everything runs on the calling thread. Work items never
//! share RNG state and results are reduced in index order, so both modes
//! produce identical output.

/// How independent work items are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon thread pool. Falls back to sequential when the crate is built
    /// without the `parallel` feature.
    #[default]
    Parallel,
}

/// Environment variable overriding the worker count used by the CLI.
pub const THREADS_ENV: &str = "WIRETAP_THREADS";

impl Exec {
    /// Applies `f` to every index in `0..n` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            Exec::Parallel => par_map(n, f),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sizes the global pool from [`THREADS_ENV`] if it is set. Absent or
/// unparsable values leave rayon's default (all available cores).
pub fn configure_from_env() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size thread pool: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let f = |i: usize| (i * i) as u64;
        let seq = Exec::Sequential.map(1000, f);
        let par = Exec::Parallel.map(1000, f);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }
}
