//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these run on the rayon global pool;
//! without it they fall back to plain iterators. Results never depend on the
//! evaluation order: reductions break ties by the lowest index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Returns `"parallel"` or `"sequential"` depending on how the crate was built.
pub fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
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

/// Picks the larger value; NaN counts as +inf, equal values keep the lower index.
fn pick(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let (ka, kb) = (key(a.1), key(b.1));
    if kb > ka || (kb == ka && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Index and value of the maximum of `f(i)` over `0..n`.
pub(crate) fn argmax<F>(n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if n == 0 {
        return None;
    }
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(|i| (i, f(i))).reduce_with(pick)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(|i| (i, f(i))).reduce(pick)
    }
}
