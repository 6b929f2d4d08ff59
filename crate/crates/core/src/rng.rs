//! Key derivation and counter-based random streams.
//!
//! Every random quantity in the crate comes from a [`ChaCha8Rng`] whose key is
//! derived from one top-level seed and a path of integers naming the consumer:
//!
//! ```text
//! environment replicate r      derive(seed, [ENV, r])
//!   initial count at site k    derive(env_key, [COUNT, k])
//!   walker i at site k         derive(env_key, [WALKER, k, i])
//!   light-cone sampler         derive(env_key, [CONE_ROW])
//! walk sampled in replicate r  derive(seed, [WALK, r, walker_id])
//! lazy reference walk r        derive(seed, [LAZY, r])
//! tagged-walker sample i       derive(seed, [TAGGED, i])
//! ```
//!
//! Because a key only depends on its own path, adding consumers (e.g. widening
//! the walker window) never perturbs existing streams, and results are
//! independent of how replicates are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod domain {
    pub const ENV: u64 = 0x454e_5600;
    pub const COUNT: u64 = 0x434e_5400;
    pub const WALKER: u64 = 0x574c_4b00;
    pub const CONE_ROW: u64 = 0x524f_5700;
    pub const WALK: u64 = 0x5041_5448;
    pub const LAZY: u64 = 0x4c41_5a59;
    pub const TAGGED: u64 = 0x5441_4747;
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child key from `seed` and an index path.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Signed sites are folded onto u64 for key paths.
#[inline]
pub fn site_key(y: i64) -> u64 {
    y as u64
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let key = derive(seed, path);
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix(key.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

static POPCOUNT8: [u8; 256] = {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        table[i] = (i as u32).count_ones() as u8;
        i += 1;
    }
    table
};

/// Bit reservoir for fair coin flips, 64 at a time.
#[derive(Debug, Clone)]
pub struct Coins<R> {
    rng: R,
    word: u64,
    left: u32,
}

impl<R: RngCore> Coins<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, word: 0, left: 0 }
    }

    /// Number of heads among `n` fair flips.
    #[inline]
    pub fn heads(&mut self, n: u32) -> u32 {
        if n < self.left && n <= 8 {
            // baseline x86_64 has no popcnt instruction
            let count = POPCOUNT8[(self.word & ((1u64 << n) - 1)) as usize] as u32;
            self.word >>= n;
            self.left -= n;
            return count;
        }
        self.heads_slow(n)
    }

    #[cold]
    fn heads_slow(&mut self, mut n: u32) -> u32 {
        let mut count = 0;
        while n > 0 {
            if self.left == 0 {
                self.word = self.rng.next_u64();
                self.left = 64;
            }
            let take = n.min(self.left);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            count += (self.word & mask).count_ones();
            self.word = if take == 64 { 0 } else { self.word >> take };
            self.left -= take;
            n -= take;
        }
        count
    }

    #[inline]
    pub fn flip(&mut self) -> bool {
        self.heads(1) == 1
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_is_path_sensitive() {
        assert_ne!(derive(1, &[0, 1]), derive(1, &[1, 0]));
        assert_ne!(derive(1, &[0]), derive(2, &[0]));
        assert_ne!(derive(1, &[]), derive(1, &[0]));
        assert_eq!(derive(9, &[3, 4]), derive(9, &[3, 4]));
    }

    #[test]
    fn streams_reproduce() {
        let a: Vec<u64> = stream(5, &[1, 2]).random_iter().take(8).collect();
        let b: Vec<u64> = stream(5, &[1, 2]).random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn coins_are_fair() {
        let mut coins = Coins::new(stream(11, &[]));
        let n = 1_000_000u32;
        let mut heads = 0u64;
        for k in 0..n / 100 {
            heads += u64::from(coins.heads(100 + (k % 3)));
        }
        let flips: u64 = (0..u64::from(n / 100)).map(|k| 100 + (k % 3)).sum();
        let z = (heads as f64 - flips as f64 / 2.0) / (flips as f64 / 4.0).sqrt();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn coins_handle_wide_requests() {
        let mut coins = Coins::new(stream(3, &[]));
        let h = coins.heads(200);
        assert!(h <= 200);
        assert_eq!(coins.heads(0), 0);
    }
}
