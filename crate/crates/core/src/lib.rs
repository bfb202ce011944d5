//! Sparse distributed memory (Kanerva network) library and a harness for
//! measuring how well corrupted parameter bits of stored binary records are
//! recovered by majority-rule reads.
//!
//! * [`sdm`]: the memory itself (hard locations, access spheres, counters).
//! * [`dataset`]: the 21-parameter catalog, CSV/JSON ingestion, prevalence,
//!   balanced subsets and frequency-matched synthetic data.
//! * [`experiments`]: corruption, normalized and baseline studies.
//! * [`stats`]: prevalence/recoverability correlations.
//! * [`results`], [`report`], [`run`]: result files, plot data and the
//!   command-line driver's reproducible runs.

pub mod bits;
pub mod dataset;
pub mod experiments;
pub mod report;
pub mod results;
pub mod run;
pub mod sdm;
pub mod seed;
pub mod stats;

pub use bits::{hamming, BitVector};
pub use dataset::{Dataset, FrequencyTable, ParameterCatalog};
pub use experiments::{CorruptionMode, ExperimentConfig};
pub use sdm::{KanervaMemory, RadiusPolicy, SdmConfig, TieBreak};
