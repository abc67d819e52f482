//! Execution strategy for the embarrassingly parallel sampling loops.
//!
//! Every parallel loop in the crate is an indexed map whose per-index work
//! draws randomness from its own stream, so results are identical under both
//! strategies. Reductions happen on the collected, ordered output.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Evaluates `f(0..n)` and collects in index order.
    pub fn map_indices<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }

    pub fn map_slice<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
        }
    }
}

/// Maximum of an iterator of floats, `0.0` for an empty one. NaN propagates.
pub(crate) fn max_or_zero<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0, |acc, v| {
        if v.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(v)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: usize| (i as f64).sqrt();
        let seq = Exec::Sequential.map_indices(1000, f);
        let def = Exec::default().map_indices(1000, f);
        assert_eq!(seq, def);
    }

    #[test]
    fn max_propagates_nan() {
        assert_eq!(max_or_zero(Vec::<f64>::new()), 0.0);
        assert_eq!(max_or_zero([1.0, 3.0, 2.0]), 3.0);
        assert!(max_or_zero([1.0, f64::NAN]).is_nan());
    }
}
