//! Seeding. Every stochastic component draws from a ChaCha8 stream keyed by a
//! 64-bit seed; child seeds are derived with the SplitMix64 finalizer so that
//! restart `r` of a run with master seed `s` always sees the same stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng/splitmix64";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable child seed for stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
