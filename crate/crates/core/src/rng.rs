//! Portable, counter-addressed random streams.
//!
//! A stream is identified by `(seed, domain, index)`. The ChaCha8 key is the
//! little-endian concatenation of `seed` and `domain`; `index` selects the
//! ChaCha stream. Any trial can therefore be regenerated in isolation, on any
//! platform, independent of how trials were partitioned across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Separates independent consumers of the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Fading = 1,
    Noise = 2,
    Dither = 3,
    Dictionary = 4,
    Symbols = 5,
    Quantizer = 6,
    Test = 0xfeed,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
