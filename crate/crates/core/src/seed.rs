//! Seed derivation.
//!
//! Every random choice in an experiment draws from a generator seeded by
//! `derive(master, purpose, index)`, so hard-location placement, subset
//! sampling and synthetic baselines can each be replayed in isolation.
//!
//! The rule is fixed and part of the result contract:
//!
//! ```text
//! derive(master, purpose, index) =
//!     splitmix64(splitmix64(master ^ splitmix64(purpose)) ^ index)
//! ```

/// One step of the SplitMix64 output function.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose tags. Values are frozen; changing one changes every result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    HardLocations = 1,
    Subset = 2,
    Baseline = 3,
    Corruption = 4,
    NormalizedHardLocations = 5,
}

pub fn derive(master: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(purpose as u64)) ^ index)
}

/// Tie-break coin for read number `ordinal`, bit `bit`, of a memory seeded
/// with `seed`.
#[inline]
pub fn tie_coin(seed: u64, ordinal: u64, bit: usize) -> bool {
    splitmix64(splitmix64(splitmix64(seed) ^ ordinal) ^ bit as u64) & 1 == 1
}
