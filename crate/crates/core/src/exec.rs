//! Execution strategy for the data-parallel inner loops (subset sums,
//! cut-set minimisation, batch SPI evaluation).
//!
//! With the `parallel` feature (on by default) work is spread with rayon;
//! without it every loop runs on the calling thread. Results are identical
//! either way: reductions that could be order-sensitive sort or use exact
//! integer arithmetic before combining.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Exec {
    /// All strategies compiled into this build.
    pub fn available() -> Vec<Exec> {
        vec![
            Exec::Sequential,
            #[cfg(feature = "parallel")]
            Exec::Parallel,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Exec::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Exec::Parallel => "parallel",
        }
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Splits `0..n` into fixed-size chunks, runs `f` on each and returns the
    /// chunk results in order. Chunk boundaries do not depend on the
    /// strategy, so a sequential merge of the output is reproducible.
    pub fn map_chunks<A, F>(self, n: u64, chunk: u64, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(std::ops::Range<u64>) -> A + Sync + Send,
    {
        let chunk = chunk.max(1);
        let chunks = n.div_ceil(chunk);
        let range = |c: u64| c * chunk..((c + 1) * chunk).min(n);
        match self {
            Exec::Sequential => (0..chunks).map(|c| f(range(c))).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..chunks).into_par_iter().map(|c| f(range(c))).collect(),
        }
    }
}
