//! Deterministic stream derivation.
//!
//! Every stochastic operation draws from a ChaCha stream derived from the
//! run seed, a purpose tag and an index. Identical seeds therefore produce
//! bit-identical outputs regardless of evaluation order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Purpose tag separating independent stream families under one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    /// One stream per trial within a table.
    Trial,
    /// One stream per experiment within a statistics run.
    Experiment,
    /// Majority-vote tie-break coins, one per bit position.
    TieMajority,
    /// Weighted-filter tie-break coins, one per bit position.
    TieWeighted,
    /// Randomized schedule generation for self-checks.
    Schedule,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Trial => 1,
            StreamDomain::Experiment => 2,
            StreamDomain::TieMajority => 3,
            StreamDomain::TieWeighted => 4,
            StreamDomain::Schedule => 5,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed for (seed, domain, index).
pub fn derive_seed(seed: u64, domain: StreamDomain, index: u64) -> u64 {
    let mixed = splitmix64(seed ^ splitmix64(domain.tag()));
    splitmix64(mixed ^ index)
}

/// A generator for the given substream.
pub fn substream(seed: u64, domain: StreamDomain, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(seed, domain, index))
}

/// A fair coin from the per-bit tie-break stream.
pub fn tie_break_coin(seed: u64, domain: StreamDomain, bit: usize) -> bool {
    use rand::Rng;
    substream(seed, domain, bit as u64).gen::<bool>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_deterministic() {
        let a: Vec<u64> = substream(42, StreamDomain::Trial, 3)
            .sample_iter(rand::distributions::Standard)
            .take(4)
            .collect();
        let b: Vec<u64> = substream(42, StreamDomain::Trial, 3)
            .sample_iter(rand::distributions::Standard)
            .take(4)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ_across_indices_and_domains() {
        let a = substream(42, StreamDomain::Trial, 0).gen::<u64>();
        let b = substream(42, StreamDomain::Trial, 1).gen::<u64>();
        let c = substream(42, StreamDomain::Experiment, 0).gen::<u64>();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
