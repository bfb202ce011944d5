//! Sparse distributed memory (Kanerva network).
//!
//! A memory is a fixed random sample of distinct *hard locations* in the
//! Boolean space `F2^N`. Each hard location owns `N` signed counters. Writing
//! a datum `d` adds `+1` (bit set) or `-1` (bit clear) to every counter of
//! every hard location within `radius` of `d`. Reading at `y` sums the
//! counters of every hard location within `radius` of `y` and thresholds each
//! pooled sum at zero (majority rule).
//!
//! Storage is autoassociative: [`KanervaMemory::write`] uses the datum as its
//! own address.
//!
//! ```
//! use sdmlab::sdm::{KanervaMemory, RadiusPolicy, SdmConfig};
//! use sdmlab::BitVector;
//!
//! let config = SdmConfig::new(4, 16).with_radius(RadiusPolicy::Fixed(1));
//! let all: Vec<BitVector> = (0..16).map(|v| BitVector::from_u64(v, 4)).collect();
//! let mut mem = KanervaMemory::with_addresses(config, all).unwrap();
//! let datum: BitVector = "1010".parse().unwrap();
//! mem.write(&datum).unwrap();
//! assert_eq!(mem.read(&"1011".parse().unwrap()).unwrap(), datum);
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{hamming, BitVector};
use crate::seed::tie_coin;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdmError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("hard-location count must be positive")]
    ZeroHardLocations,
    #[error(
        "{requested} hard locations requested but the space of dimension {dimension} has fewer distinct addresses"
    )]
    TooManyHardLocations { requested: usize, dimension: usize },
    #[error("duplicate hard-location address {0}")]
    DuplicateAddress(BitVector),
    #[error("expected {expected} explicit addresses, got {found}")]
    AddressCountMismatch { expected: usize, found: usize },
    #[error("fixed radius {radius} exceeds dimension {dimension}")]
    RadiusTooLarge { radius: u32, dimension: usize },
    #[error("counter bound must be positive")]
    ZeroCounterBound,
    #[error("vector of length {found} does not match memory dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("access-sphere radius has not been resolved")]
    RadiusUnresolved,
    #[error("radius policy needs at least 2 {population}, got {found}")]
    InsufficientItems { population: &'static str, found: usize },
    #[error("no hard location within radius {radius} of {address}")]
    EmptyAccessSphere { address: BitVector, radius: u32 },
}

/// How the access-sphere radius is chosen.
///
/// String form (also used on the command line and in result files):
/// `fixed:R`, `quarter-median`, `hl-median+D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RadiusPolicy {
    Fixed(u32),
    /// `max(1, floor(m / 4))`, `m` the lower median of pairwise distances
    /// between the stored items.
    QuarterItemMedian,
    /// Lower median of pairwise distances between hard-location addresses,
    /// plus `delta`.
    HardLocationMedianPlus {
        delta: u32,
    },
}

impl fmt::Display for RadiusPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusPolicy::Fixed(r) => write!(f, "fixed:{r}"),
            RadiusPolicy::QuarterItemMedian => f.write_str("quarter-median"),
            RadiusPolicy::HardLocationMedianPlus { delta } => write!(f, "hl-median+{delta}"),
        }
    }
}

impl FromStr for RadiusPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid radius policy {s:?} (expected fixed:R, quarter-median or hl-median+D)");
        if s == "quarter-median" {
            Ok(RadiusPolicy::QuarterItemMedian)
        } else if let Some(r) = s.strip_prefix("fixed:") {
            r.parse().map(RadiusPolicy::Fixed).map_err(|_| bad())
        } else if let Some(d) = s.strip_prefix("hl-median+") {
            d.parse()
                .map(|delta| RadiusPolicy::HardLocationMedianPlus { delta })
                .map_err(|_| bad())
        } else {
            Err(bad())
        }
    }
}

impl TryFrom<String> for RadiusPolicy {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RadiusPolicy> for String {
    fn from(p: RadiusPolicy) -> Self {
        p.to_string()
    }
}

/// Resolution of pooled sums that are exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Zero,
    One,
    /// Coin drawn from `(memory seed, read ordinal, bit index)`.
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdmConfig {
    pub dimension: usize,
    pub hard_location_count: usize,
    pub radius_policy: RadiusPolicy,
    pub tie_break: TieBreak,
    /// Saturation limit for counters; `None` means unbounded.
    pub counter_bound: Option<u32>,
    pub seed: u64,
}

impl SdmConfig {
    pub const DEFAULT_HARD_LOCATIONS: usize = 1 << 17;

    pub fn new(dimension: usize, hard_location_count: usize) -> Self {
        Self {
            dimension,
            hard_location_count,
            radius_policy: RadiusPolicy::QuarterItemMedian,
            tie_break: TieBreak::Zero,
            counter_bound: None,
            seed: 0,
        }
    }

    pub fn with_radius(mut self, policy: RadiusPolicy) -> Self {
        self.radius_policy = policy;
        self
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn with_counter_bound(mut self, bound: Option<u32>) -> Self {
        self.counter_bound = bound;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SdmError> {
        if self.dimension == 0 {
            return Err(SdmError::ZeroDimension);
        }
        if self.hard_location_count == 0 {
            return Err(SdmError::ZeroHardLocations);
        }
        if self.dimension < usize::BITS as usize && self.hard_location_count > (1usize << self.dimension) {
            return Err(SdmError::TooManyHardLocations {
                requested: self.hard_location_count,
                dimension: self.dimension,
            });
        }
        if let RadiusPolicy::Fixed(radius) = self.radius_policy {
            if radius as usize > self.dimension {
                return Err(SdmError::RadiusTooLarge {
                    radius,
                    dimension: self.dimension,
                });
            }
        }
        if self.counter_bound == Some(0) {
            return Err(SdmError::ZeroCounterBound);
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct KanervaMemory {
    config: SdmConfig,
    words_per_address: usize,
    // Packed hard-location addresses, `words_per_address` words each.
    addresses: Vec<u64>,
    // `dimension` counters per hard location, row-major.
    counters: Vec<i64>,
    radius: Option<u32>,
    write_count: u64,
    // Advanced on every read; feeds the SeededRandom tie coin.
    read_ordinal: AtomicU64,
    // Address -> hard-location index for large memories of dimension at
    // most 64, where enumerating the Hamming ball beats a full scan.
    index: Option<AddressIndex>,
}

#[derive(Debug, Clone)]
enum AddressIndex {
    // One slot per point of the space, holding `index + 1` (0 = absent).
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

impl AddressIndex {
    fn build(addresses: &[u64], n: usize) -> Self {
        if n <= DENSE_MAX_DIMENSION {
            let mut slots = vec![0u32; 1 << n];
            for (i, &a) in addresses.iter().enumerate() {
                slots[a as usize] = i as u32 + 1;
            }
            AddressIndex::Dense(slots)
        } else {
            AddressIndex::Sparse(addresses.iter().enumerate().map(|(i, &a)| (a, i as u32)).collect())
        }
    }

    #[inline]
    fn get(&self, address: u64) -> Option<usize> {
        match self {
            AddressIndex::Dense(slots) => match slots[address as usize] {
                0 => None,
                k => Some(k as usize - 1),
            },
            AddressIndex::Sparse(map) => map.get(&address).map(|&i| i as usize),
        }
    }
}

/// Largest dimension whose address space gets a flat lookup table.
const DENSE_MAX_DIMENSION: usize = 24;

/// Memories at least this large get an address index.
const INDEX_THRESHOLD: usize = 4096;

impl Clone for KanervaMemory {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            words_per_address: self.words_per_address,
            addresses: self.addresses.clone(),
            counters: self.counters.clone(),
            radius: self.radius,
            write_count: self.write_count,
            read_ordinal: AtomicU64::new(self.read_ordinal.load(Ordering::Relaxed)),
            index: self.index.clone(),
        }
    }
}

impl KanervaMemory {
    /// Samples `hard_location_count` distinct addresses uniformly from
    /// `F2^N` using a generator seeded with `config.seed`.
    pub fn new(config: SdmConfig) -> Result<Self, SdmError> {
        config.validate()?;
        let addresses = sample_addresses(&config);
        Ok(Self::from_parts(config, addresses))
    }

    /// Uses `addresses` verbatim as the hard locations.
    pub fn with_addresses(config: SdmConfig, addresses: Vec<BitVector>) -> Result<Self, SdmError> {
        config.validate()?;
        if addresses.len() != config.hard_location_count {
            return Err(SdmError::AddressCountMismatch {
                expected: config.hard_location_count,
                found: addresses.len(),
            });
        }
        let mut seen = HashSet::with_capacity(addresses.len());
        for a in &addresses {
            if a.len() != config.dimension {
                return Err(SdmError::DimensionMismatch {
                    expected: config.dimension,
                    found: a.len(),
                });
            }
            if !seen.insert(a) {
                return Err(SdmError::DuplicateAddress(a.clone()));
            }
        }
        let packed = addresses.iter().flat_map(|a| a.words().iter().copied()).collect();
        Ok(Self::from_parts(config, packed))
    }

    fn from_parts(config: SdmConfig, addresses: Vec<u64>) -> Self {
        let n = config.dimension;
        let count = config.hard_location_count;
        let index = (count >= INDEX_THRESHOLD && n <= 64 && count < u32::MAX as usize)
            .then(|| AddressIndex::build(&addresses, n));
        let radius = match config.radius_policy {
            RadiusPolicy::Fixed(radius) => Some(radius),
            _ => None,
        };
        Self {
            words_per_address: n.div_ceil(64),
            addresses,
            counters: vec![0; count * n],
            config,
            radius,
            write_count: 0,
            read_ordinal: AtomicU64::new(0),
            index,
        }
    }

    pub fn config(&self) -> &SdmConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension
    }

    pub fn hard_location_count(&self) -> usize {
        self.config.hard_location_count
    }

    fn address_words(&self, i: usize) -> &[u64] {
        let w = self.words_per_address;
        &self.addresses[i * w..(i + 1) * w]
    }

    /// Address of hard location `i`.
    pub fn address(&self, i: usize) -> BitVector {
        BitVector::from_words(self.config.dimension, self.address_words(i))
    }

    /// All hard-location addresses, in index order.
    pub fn addresses(&self) -> Vec<BitVector> {
        (0..self.hard_location_count()).map(|i| self.address(i)).collect()
    }

    /// Counters of hard location `i`.
    pub fn counters(&self, i: usize) -> &[i64] {
        let n = self.config.dimension;
        &self.counters[i * n..(i + 1) * n]
    }

    pub fn radius(&self) -> Option<u32> {
        self.radius
    }

    pub fn write_count(&self) -> u64 {
        self.write_count
    }

    /// Resolves and stores the access-sphere radius according to the
    /// configured policy. `items` is only consulted by
    /// [`RadiusPolicy::QuarterItemMedian`].
    pub fn resolve_radius(&mut self, items: &[BitVector]) -> Result<u32, SdmError> {
        let radius = match self.config.radius_policy {
            RadiusPolicy::Fixed(radius) => radius,
            RadiusPolicy::QuarterItemMedian => {
                for item in items {
                    self.check_len(item)?;
                }
                let m = lower_median_pairwise(items).ok_or(SdmError::InsufficientItems {
                    population: "items",
                    found: items.len(),
                })?;
                (m / 4).max(1)
            }
            RadiusPolicy::HardLocationMedianPlus { delta } => {
                let m = lower_median_pairwise(&self.addresses()).ok_or(SdmError::InsufficientItems {
                    population: "hard locations",
                    found: self.hard_location_count(),
                })?;
                m.saturating_add(delta).min(self.config.dimension as u32)
            }
        };
        self.radius = Some(radius);
        Ok(radius)
    }

    /// Indices of hard locations within the radius of `address`, ascending.
    pub fn access_sphere(&self, address: &BitVector) -> Result<Vec<usize>, SdmError> {
        let radius = self.radius.ok_or(SdmError::RadiusUnresolved)?;
        self.check_len(address)?;
        Ok(self.sphere_indices(address, radius))
    }

    /// Sphere members in ascending index order.
    fn sphere_indices(&self, address: &BitVector, radius: u32) -> Vec<usize> {
        let n = self.config.dimension;
        if let Some(index) = &self.index {
            if ball_size(n, radius).saturating_mul(4) < self.hard_location_count() as u128 {
                let mut out = Vec::new();
                for_each_in_ball(address.words()[0], n, radius, &mut |p| {
                    if let Some(i) = index.get(p) {
                        out.push(i);
                    }
                });
                out.sort_unstable();
                return out;
            }
        }
        let query = address.words();
        self.addresses
            .chunks_exact(self.words_per_address)
            .enumerate()
            .filter(|(_, a)| a.iter().zip(query).map(|(x, y)| (x ^ y).count_ones()).sum::<u32>() <= radius)
            .map(|(i, _)| i)
            .collect()
    }

    /// Autoassociative write of `datum` at its own address.
    pub fn write(&mut self, datum: &BitVector) -> Result<(), SdmError> {
        self.write_at(datum, datum)
    }

    /// Writes `datum` into every hard location within the radius of
    /// `address`.
    pub fn write_at(&mut self, address: &BitVector, datum: &BitVector) -> Result<(), SdmError> {
        let radius = self.radius.ok_or(SdmError::RadiusUnresolved)?;
        self.check_len(address)?;
        self.check_len(datum)?;
        let n = self.config.dimension;
        let bound = self.config.counter_bound.map(i64::from);
        let deltas: Vec<i64> = datum.iter().map(|b| if b { 1 } else { -1 }).collect();
        for i in self.sphere_indices(address, radius) {
            for (c, d) in self.counters[i * n..(i + 1) * n].iter_mut().zip(&deltas) {
                *c += d;
                if let Some(b) = bound {
                    *c = (*c).clamp(-b, b);
                }
            }
        }
        self.write_count += 1;
        Ok(())
    }

    /// Pooled counter sums over the access sphere of `address`, together
    /// with the number of hard locations pooled.
    pub fn pooled_sums(&self, address: &BitVector) -> Result<(Vec<i64>, usize), SdmError> {
        let radius = self.radius.ok_or(SdmError::RadiusUnresolved)?;
        self.check_len(address)?;
        let mut sums = vec![0i64; self.config.dimension];
        let mut pooled = 0;
        for i in self.sphere_indices(address, radius) {
            pooled += 1;
            for (s, c) in sums.iter_mut().zip(self.counters(i)) {
                *s += c;
            }
        }
        Ok((sums, pooled))
    }

    /// Majority-rule read at `address`.
    ///
    /// Fails with [`SdmError::EmptyAccessSphere`] when no hard location lies
    /// within the radius.
    pub fn read(&self, address: &BitVector) -> Result<BitVector, SdmError> {
        let (sums, pooled) = self.pooled_sums(address)?;
        let ordinal = self.read_ordinal.fetch_add(1, Ordering::Relaxed);
        if pooled == 0 {
            return Err(SdmError::EmptyAccessSphere {
                address: address.clone(),
                radius: self.radius.unwrap_or_default(),
            });
        }
        let mut out = BitVector::zeros(self.config.dimension);
        for (i, &s) in sums.iter().enumerate() {
            let bit = match s.signum() {
                1 => true,
                -1 => false,
                _ => match self.config.tie_break {
                    TieBreak::Zero => false,
                    TieBreak::One => true,
                    TieBreak::SeededRandom => tie_coin(self.config.seed, ordinal, i),
                },
            };
            if bit {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Number of reads issued so far (including failed empty-sphere reads).
    pub fn read_ordinal(&self) -> u64 {
        self.read_ordinal.load(Ordering::Relaxed)
    }

    fn check_len(&self, v: &BitVector) -> Result<(), SdmError> {
        if v.len() != self.config.dimension {
            return Err(SdmError::DimensionMismatch {
                expected: self.config.dimension,
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// Packed addresses, `ceil(N / 64)` words each.
fn sample_addresses(config: &SdmConfig) -> Vec<u64> {
    let n = config.dimension;
    let count = config.hard_location_count;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Dense regime: draw indices without replacement from the whole space.
    if n < 63 && (count as u64) * 2 > (1u64 << n) {
        return index::sample(&mut rng, 1usize << n, count)
            .into_iter()
            .map(|v| v as u64)
            .collect();
    }
    // Sparse regime: rejection of duplicates keeps the draw uniform over
    // distinct address sets.
    let mut out = Vec::with_capacity(count * n.div_ceil(64));
    if n <= DENSE_MAX_DIMENSION {
        let mut seen = vec![false; 1 << n];
        while out.len() < count {
            let candidate = BitVector::random(n, &mut rng).words()[0];
            if !std::mem::replace(&mut seen[candidate as usize], true) {
                out.push(candidate);
            }
        }
    } else if n <= 64 {
        let mut seen = HashSet::with_capacity(count);
        while seen.len() < count {
            let candidate = BitVector::random(n, &mut rng).words()[0];
            if seen.insert(candidate) {
                out.push(candidate);
            }
        }
    } else {
        let mut seen = HashSet::with_capacity(count);
        while seen.len() < count {
            let candidate = BitVector::random(n, &mut rng);
            out.extend_from_slice(candidate.words());
            if !seen.insert(candidate) {
                out.truncate(out.len() - n.div_ceil(64));
            }
        }
    }
    out
}

/// Number of points within Hamming distance `radius` in `F2^n`.
pub fn ball_size(n: usize, radius: u32) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 0..=(radius as usize).min(n) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((n - k) as u128) / (k as u128 + 1);
    }
    total
}

/// Calls `f` on every point of `F2^n` (`n <= 64`, packed in a `u64`) within
/// `radius` of `center`.
fn for_each_in_ball(center: u64, n: usize, radius: u32, f: &mut impl FnMut(u64)) {
    fn rec(p: u64, start: usize, n: usize, left: u32, f: &mut impl FnMut(u64)) {
        f(p);
        if left == 0 {
            return;
        }
        for i in start..n {
            rec(p ^ (1 << i), i + 1, n, left - 1, f);
        }
    }
    rec(center, 0, n, radius, f);
}

/// Lower median of the multiset of all unordered-pair Hamming distances.
/// `None` with fewer than two items.
pub fn lower_median_pairwise(items: &[BitVector]) -> Option<u32> {
    if items.len() < 2 {
        return None;
    }
    let mut d = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for (i, a) in items.iter().enumerate() {
        for b in &items[i + 1..] {
            d.push(hamming(a, b).expect("equal-length items"));
        }
    }
    let k = (d.len() - 1) / 2;
    let (_, m, _) = d.select_nth_unstable(k);
    Some(*m)
}
