//! Execution strategy for trial and grid fan-out.
//!
//! Both strategies return results in index order, so outputs never depend on
//! the strategy or the worker count. Without the `parallel` feature,
//! [`Execution::Parallel`] runs sequentially.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `f(0), ..., f(n - 1)` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// The smallest index `i` with `f(i) = Some(_)`, together with its value.
    pub fn find_first<T, F>(self, n: usize, f: F) -> Option<(usize, T)>
    where
        T: Send,
        F: Fn(usize) -> Option<T> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n)
                    .into_par_iter()
                    .find_map_first(|i| f(i).map(|v| (i, v)))
            }
            _ => (0..n).find_map(|i| f(i).map(|v| (i, v))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: usize| (i * i) % 7;
        assert_eq!(Execution::Sequential.map(100, f), Execution::Parallel.map(100, f));
        let g = |i: usize| (i % 13 == 12 && i > 30).then_some(i * 2);
        assert_eq!(Execution::Parallel.find_first(1000, g), Some((38, 76)));
        assert_eq!(Execution::Sequential.find_first(1000, g), Some((38, 76)));
        assert_eq!(Execution::Parallel.find_first(10, |_| None::<u8>), None);
    }
}
