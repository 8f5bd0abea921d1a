/// Picks the rayon expression when the `parallel` feature is on and the
/// sequential one otherwise. Both arms must produce identical results.
macro_rules! if_parallel {
    ($parallel:expr, $sequential:expr) => {{
        #[cfg(feature = "parallel")]
        {
            $parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            $sequential
        }
    }};
}

pub(crate) use if_parallel;
