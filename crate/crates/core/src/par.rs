//! Data-parallel iteration with a sequential fallback.
//!
//! With the `parallel` feature (default) `maybe_par_iter!` hands the range to
//! rayon; without it the same call sites compile against `std` iterators.
//! Every caller collects into an ordered `Vec`, so results do not depend on
//! how rayon splits the work.

#[cfg(feature = "parallel")]
macro_rules! maybe_par_iter {
    ($e:expr) => {
        rayon::iter::IntoParallelIterator::into_par_iter($e)
    };
}

#[cfg(not(feature = "parallel"))]
macro_rules! maybe_par_iter {
    ($e:expr) => {
        ::std::iter::IntoIterator::into_iter($e)
    };
}

pub(crate) use maybe_par_iter;

/// Derives the seed of replicate `index` from a base seed.
///
/// SplitMix64 finalizer applied to `base + (index + 1) * golden_gamma`. The
/// mapping is fixed so serial and parallel runs draw identical replicates.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
