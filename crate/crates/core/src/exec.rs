//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) the parallel variants run on rayon;
//! without it every variant degrades to a plain sequential loop. Results are
//! always returned in input order, so callers observe identical output in
//! both builds.

/// How a batch of independent work items is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with at most this many worker threads.
    Bounded(usize),
}

impl Execution {
    /// `Bounded(n)` for n > 1, sequential otherwise.
    pub fn with_parallelism(n: usize) -> Self {
        if n > 1 {
            Execution::Bounded(n)
        } else {
            Execution::Sequential
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential | Execution::Bounded(0 | 1))
    }

    /// Applies `f` to every item and returns the results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self {
                Execution::Sequential | Execution::Bounded(0 | 1) => {}
                Execution::Parallel => return items.par_iter().map(f).collect(),
                Execution::Bounded(n) => {
                    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                        Ok(pool) => return pool.install(|| items.par_iter().map(&f).collect()),
                        Err(e) => {
                            tracing::warn!("could not build a {n}-thread pool ({e}); running sequentially")
                        }
                    }
                }
            }
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        let items: Vec<u64> = (0..1000).collect();
        let expect: Vec<u64> = items.iter().map(|x| x * x).collect();
        for mode in [
            Execution::Sequential,
            Execution::Parallel,
            Execution::Bounded(3),
            Execution::Bounded(1),
        ] {
            assert_eq!(mode.map(&items, |x| x * x), expect, "{mode:?}");
        }
    }

    #[test]
    fn parallelism_one_is_sequential() {
        assert_eq!(Execution::with_parallelism(1), Execution::Sequential);
        assert_eq!(Execution::with_parallelism(4), Execution::Bounded(4));
    }
}
