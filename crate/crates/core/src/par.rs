//! Execution policy for the data-parallel loops in the crate.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] fans work
//! out over the rayon pool; without it every policy runs sequentially.
//! Results are always returned in input order, so output never depends on
//! the policy.

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
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps a fallible `f` over `items`; the error of the lowest failing index wins.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }

    /// Minimum of `f` over `items` under a total order on keys. `None` results are skipped.
    pub fn min_by_key<T, R, K, F>(self, items: &[T], f: F) -> Option<(K, R)>
    where
        T: Sync,
        R: Send,
        K: Ord + Send,
        F: Fn(&T) -> Option<(K, R)> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items
                    .par_iter()
                    .filter_map(f)
                    .min_by(|a, b| a.0.cmp(&b.0))
            }
            _ => items.iter().filter_map(f).min_by(|a, b| a.0.cmp(&b.0)),
        }
    }
}
