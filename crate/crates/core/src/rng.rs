//! Seeded, splittable random streams.
//!
//! Every Monte Carlo trial owns a private generator derived from a master
//! seed and the trial index with [`mix64`], so results do not depend on the
//! order in which trials are scheduled across threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator used for all sampling in this crate.
pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of stream `index` under `master`.
///
/// `mix64(s, i) = splitmix64(splitmix64(s) + (i + 1) * GOLDEN_GAMMA)`. The
/// outer finalizer decorrelates neighbouring indices; the inner one keeps
/// small master seeds (0, 1, 2, ...) from producing overlapping families.
#[inline]
pub fn mix64(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// A generator seeded directly from a 64-bit value.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// The generator for stream `index` of `master`.
pub fn derive_rng(master: u64, index: u64) -> StreamRng {
    rng_from_seed(mix64(master, index))
}

/// A named family of streams under one master seed.
///
/// `child(label)` gives an independent sub-family, so an experiment can hand
/// disjoint families to its null branch, planted branch, pilot run and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn child(&self, label: u64) -> SeedTree {
        SeedTree {
            master: mix64(self.master ^ 0xa5a5_a5a5_a5a5_a5a5, label),
        }
    }

    pub fn seed(&self, index: u64) -> u64 {
        mix64(self.master, index)
    }

    pub fn rng(&self, index: u64) -> StreamRng {
        derive_rng(self.master, index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0:
        // state advances by the golden gamma before finalizing.
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0xe220_a839_7b1d_cdaf);
        assert_eq!(splitmix64(GOLDEN_GAMMA.wrapping_mul(2)), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let mut a = derive_rng(7, 3);
        let mut b = derive_rng(7, 3);
        let mut c = derive_rng(7, 4);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn children_differ_from_parent() {
        let t = SeedTree::new(42);
        assert_ne!(t.child(0).seed(0), t.seed(0));
        assert_ne!(t.child(0).seed(0), t.child(1).seed(0));
        assert_eq!(t.child(5), SeedTree::new(42).child(5));
    }
}
