//! Seeded random streams.
//!
//! Every random draw comes from a ChaCha8 stream addressed by
//! `(seed, domain, index)`, so a partition of work can be run in any order or
//! on any thread and still reproduce the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent purposes that draw from the same user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Client = 0x436c_6965_6e74,
    Server = 0x5365_7276_6572,
    Sampler = 0x5361_6d70_6c65,
    Instance = 0x496e_7374,
    Measure = 0x4d65_6173,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
