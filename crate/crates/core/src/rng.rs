//! Seeded, portable random substreams.
//!
//! The algorithm is pinned so outputs can be reproduced by any
//! implementation:
//!
//! 1. Key: four successive SplitMix64 outputs of the 64-bit seed, each
//!    written little-endian, form the 32-byte ChaCha key.
//! 2. Stream: the substream index is the ChaCha 64-bit stream id; the word
//!    position starts at zero. The core is ChaCha with 8 rounds.
//! 3. Bounded integers use Lemire's multiply-and-reject method on
//!    `next_u64`.
//! 4. Sampling `k` of `n` positions is a partial Fisher–Yates: for
//!    `i in 0..k`, swap `i` with `i + below(n − i)`; the first `k` slots
//!    are the sample.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded in manifests.
pub const ALGORITHM: &str = "chacha8/splitmix64-key/stream-id/lemire/partial-fisher-yates";

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct Substream {
    rng: ChaCha8Rng,
}

impl Substream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Substream { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `0..bound`. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
            }
        }
        (m >> 64) as u64
    }

    pub fn below_usize(&mut self, bound: usize) -> usize {
        self.below(bound as u64) as usize
    }

    /// Moves a uniform `k`-subset of `items` to the front, in draw order.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        assert!(k <= n);
        for i in 0..k {
            let j = i + self.below_usize(n - i);
            items.swap(i, j);
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        self.partial_shuffle(items, n);
    }

    /// `k` distinct indices drawn uniformly from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.partial_shuffle(&mut idx, k);
        idx.truncate(k);
        idx
    }
}
