//! Counter-based random substreams.
//!
//! Every random quantity is drawn from a ChaCha stream whose key is derived
//! from the master seed and a domain tag, and whose stream id is the logical
//! index of the consumer (path, cell, replication). Output therefore never
//! depends on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep substreams of different subsystems disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Paths = 1,
    InitialState = 2,
    Noise = 3,
    GridShift = 4,
    Replication = 5,
    Oracle = 6,
    Test = 7,
    AggregateNoise = 8,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Stream keyed by `(seed, domain)` positioned on stream `stream`.
pub fn substream(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = mix64(seed ^ (domain as u64).rotate_left(32));
    for chunk in key.chunks_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = substream(7, Domain::Paths, 3).random_iter().take(4).collect();
        let b: Vec<u64> = substream(7, Domain::Paths, 3).random_iter().take(4).collect();
        let c: Vec<u64> = substream(7, Domain::Paths, 4).random_iter().take(4).collect();
        let d: Vec<u64> = substream(7, Domain::Noise, 3).random_iter().take(4).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
