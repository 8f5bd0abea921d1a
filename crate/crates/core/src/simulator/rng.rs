use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Seedable SplitMix64 stream with portable bounded sampling.
///
/// `below` uses the widening-multiply method with rejection, so the sequence
/// of draws depends only on the seed and the bounds requested.
pub struct SceneRng {
    inner: SplitMix64,
}

impl SceneRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let product = (self.next_u64() as u128) * (n as u128);
            if (product as u64) >= threshold {
                return (product >> 64) as usize;
            }
        }
    }

    /// Uniform integer in `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SceneRng::new(42);
        let mut b = SceneRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.below(17), b.below(17));
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of SplitMix64 seeded with 0
        let mut r = SceneRng::new(0);
        assert_eq!(r.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(r.next_u64(), 0x6e789e6aa1b965f4);
    }

    #[test]
    fn below_stays_in_range_and_covers_it() {
        let mut r = SceneRng::new(7);
        let mut seen = [false; 5];
        for _ in 0..200 {
            let v = r.below(5);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(r.between(3, 3), 3);
    }
}
