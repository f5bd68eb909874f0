//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] maps over
//! rayon's thread pool. Without it, every policy runs sequentially. Results
//! are always collected in input order, and every reduction in this crate
//! folds that ordered vector sequentially, so outputs do not depend on the
//! number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution policy for per-item work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when this policy will actually fan out to worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`Exec::map`] but over `0..n`.
    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    pub fn map_zip<A, B, U, F>(self, a: &[A], b: &[B], f: F) -> Vec<U>
    where
        A: Sync,
        B: Sync,
        U: Send,
        F: Fn(&A, &B) -> U + Sync + Send,
    {
        debug_assert_eq!(a.len(), b.len());
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return a
                .par_iter()
                .zip(b.par_iter())
                .map(|(x, y)| f(x, y))
                .collect();
        }
        a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
    }
}
