//! Corruption experiments over a Kanerva memory.
//!
//! Each trial builds a fresh memory (new hard locations drawn from a
//! trial-derived seed), stores every language vector once at its own
//! address, and then probes recoverability parameter by parameter: the
//! probe reads at a language vector with the parameter's bit flipped and
//! scores the Hamming distance between the read result and the original.
//! A trial's score for a parameter is the mean over probed languages; the
//! reported score is the mean (and sample standard deviation) over trials.
//!
//! Three studies are provided:
//!
//! * [`corruption_experiment`]: every language written, every parameter probed.
//! * [`normalized_experiment`]: for each parameter a balanced subset (half of
//!   the languages with the parameter set) is written and only that parameter
//!   is probed, removing the effect of prevalence.
//! * [`baseline_experiment`]: the corruption procedure on synthetic i.i.d.
//!   data with the same per-parameter frequencies.
//!
//! Trials run in parallel; results merge by trial index, so output is
//! independent of scheduling.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{hamming, BitVector};
use crate::dataset::{
    balanced_subset, frequencies, synthesize_random, Dataset, DatasetError, FrequencyTable, ParameterCatalog,
    SkipMarker, Subset,
};
use crate::sdm::{KanervaMemory, SdmConfig, SdmError};
use crate::seed::{derive, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Memory(#[from] SdmError),
    #[error("empty access sphere in trial {trial}, parameter {parameter}, language {language:?}")]
    EmptyAccessSphere {
        trial: usize,
        parameter: String,
        language: String,
    },
}

/// How recoverability is probed.
///
/// Only `SingleBitRead` is the canonical procedure. The other two are
/// configurable stand-ins: `MultiBitRead(k)` flips the tested bit plus
/// `k - 1` other random bits of the read address; `WriteTime(k)` stores
/// every datum with the tested bit plus `k - 1` other random bits flipped
/// and reads at the true vector.
///
/// String form: `single`, `multi:K`, `write:K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CorruptionMode {
    #[default]
    SingleBitRead,
    MultiBitRead(usize),
    WriteTime(usize),
}

impl fmt::Display for CorruptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorruptionMode::SingleBitRead => f.write_str("single"),
            CorruptionMode::MultiBitRead(k) => write!(f, "multi:{k}"),
            CorruptionMode::WriteTime(k) => write!(f, "write:{k}"),
        }
    }
}

impl FromStr for CorruptionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid corruption mode {s:?} (expected single, multi:K or write:K)");
        if s == "single" {
            return Ok(CorruptionMode::SingleBitRead);
        }
        let (kind, k) = s.split_once(':').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        match kind {
            "multi" => Ok(CorruptionMode::MultiBitRead(k)),
            "write" => Ok(CorruptionMode::WriteTime(k)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for CorruptionMode {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CorruptionMode> for String {
    fn from(m: CorruptionMode) -> Self {
        m.to_string()
    }
}

/// What to do when a probe's access sphere holds no hard location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptySpherePolicy {
    /// Exclude the probe from the average and count it.
    #[default]
    Skip,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Memory settings. `sdm.seed` is not used: each trial's memory seed
    /// is derived from `master_seed`.
    pub sdm: SdmConfig,
    pub trials: usize,
    pub corruption_mode: CorruptionMode,
    /// Balanced subset size for the normalized study.
    pub size: usize,
    pub master_seed: u64,
    pub empty_sphere: EmptySpherePolicy,
}

impl ExperimentConfig {
    pub const DEFAULT_TRIALS: usize = 20;
    pub const DEFAULT_SIZE: usize = 95;

    /// Defaults: 2^17 hard locations, quarter-median radius, zero
    /// tie-break, 20 trials, single-bit read corruption, subset size 95.
    pub fn new(dimension: usize) -> Self {
        Self {
            sdm: SdmConfig::new(dimension, SdmConfig::DEFAULT_HARD_LOCATIONS),
            trials: Self::DEFAULT_TRIALS,
            corruption_mode: CorruptionMode::SingleBitRead,
            size: Self::DEFAULT_SIZE,
            master_seed: 0,
            empty_sphere: EmptySpherePolicy::Skip,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.sdm.validate()?;
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.size == 0 {
            return Err(ExperimentError::Config("subset size must be positive".into()));
        }
        match self.corruption_mode {
            CorruptionMode::MultiBitRead(k) | CorruptionMode::WriteTime(k) if k == 0 || k > self.sdm.dimension => {
                Err(ExperimentError::Config(format!(
                    "corruption mode {} needs 1 <= k <= {}",
                    self.corruption_mode, self.sdm.dimension
                )))
            }
            _ => Ok(()),
        }
    }

    fn check_width(&self, width: usize) -> Result<(), ExperimentError> {
        if width != self.sdm.dimension {
            return Err(ExperimentError::Config(format!(
                "dataset has {width} parameters but memory dimension is {}",
                self.sdm.dimension
            )));
        }
        Ok(())
    }

    fn memory_config(&self, seed: u64) -> SdmConfig {
        SdmConfig {
            seed,
            ..self.sdm.clone()
        }
    }
}

/// Score of one parameter aggregated over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterScore {
    pub parameter_id: String,
    pub label: String,
    /// Fraction of the written population with the parameter set.
    pub prevalence: f64,
    /// Mean over trials of the per-trial mean Hamming distance. `None` when
    /// every probe in every trial hit an empty access sphere.
    pub score_mean: Option<f64>,
    /// Sample standard deviation across trials (0 for a single trial).
    pub score_std: Option<f64>,
    /// Trials that contributed at least one probe.
    pub trials: usize,
    pub probes: u64,
    pub skipped_probes: u64,
    /// Normalized study only: balanced subset size and the tested
    /// parameter's prevalence inside it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_prevalence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub dataset_digest: String,
    pub dataset_rows: usize,
    /// Synthetic rows per trial (baseline study only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_rows: Option<usize>,
    pub dimension: usize,
    pub radius_min: Option<u32>,
    pub radius_max: Option<u32>,
    pub total_probes: u64,
    pub skipped_probes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionResult {
    pub metadata: RunMetadata,
    pub parameters: Vec<ParameterScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedResult {
    pub metadata: RunMetadata,
    pub parameters: Vec<ParameterScore>,
    pub skipped: Vec<SkipMarker>,
}

/// One balanced subset as drawn for a normalized trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetObservation {
    pub parameter_index: usize,
    pub trial: usize,
    pub size: usize,
    pub ones: usize,
    pub zeros: usize,
}

/// Mean and sample standard deviation, insensitive to input order.
pub fn aggregate(trial_scores: &[f64]) -> Option<(f64, f64)> {
    if trial_scores.is_empty() {
        return None;
    }
    let mut v = trial_scores.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        (sq.iter().sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// Memory seed for trial `trial` of the corruption and baseline studies.
pub fn trial_memory_seed(master: u64, trial: usize) -> u64 {
    derive(master, Purpose::HardLocations, trial as u64)
}

fn normalized_index(parameter: usize, trial: usize) -> u64 {
    ((parameter as u64) << 32) | trial as u64
}

/// Seeds `(subset, memory)` for one normalized trial.
pub fn normalized_seeds(master: u64, parameter: usize, trial: usize) -> (u64, u64) {
    let idx = normalized_index(parameter, trial);
    (
        derive(master, Purpose::Subset, idx),
        derive(master, Purpose::NormalizedHardLocations, idx),
    )
}

/// Per-parameter probe tallies for one trial.
#[derive(Debug, Clone, Default)]
struct Tally {
    sum: u64,
    probes: u64,
    skipped: u64,
}

impl Tally {
    fn mean(&self) -> Option<f64> {
        (self.probes > 0).then(|| self.sum as f64 / self.probes as f64)
    }
}

struct TrialOutcome {
    radius: u32,
    tallies: Vec<Tally>,
}

/// Flips bit `parameter` plus `extra` other distinct random bits.
fn corrupt(v: &BitVector, parameter: usize, extra: usize, rng: &mut ChaCha8Rng) -> BitVector {
    let mut out = v.clone();
    out.flip(parameter);
    if extra > 0 {
        for k in index::sample(rng, v.len() - 1, extra) {
            // skip over the tested bit
            out.flip(if k >= parameter { k + 1 } else { k });
        }
    }
    out
}

struct ProbeContext<'a> {
    config: &'a ExperimentConfig,
    catalog: &'a ParameterCatalog,
    names: Vec<&'a str>,
    trial: usize,
}

impl ProbeContext<'_> {
    fn record(
        &self,
        tally: &mut Tally,
        result: Result<BitVector, SdmError>,
        original: &BitVector,
        parameter: usize,
        language: usize,
    ) -> Result<(), ExperimentError> {
        match result {
            Ok(read) => {
                tally.sum += hamming(&read, original).expect("memory preserves dimension") as u64;
                tally.probes += 1;
                Ok(())
            }
            Err(SdmError::EmptyAccessSphere { .. }) => match self.config.empty_sphere {
                EmptySpherePolicy::Skip => {
                    tally.skipped += 1;
                    Ok(())
                }
                EmptySpherePolicy::Abort => Err(ExperimentError::EmptyAccessSphere {
                    trial: self.trial,
                    parameter: self.catalog.entries()[parameter].id.clone(),
                    language: self.names[language].to_string(),
                }),
            },
            Err(e) => Err(e.into()),
        }
    }
}

fn build_memory(
    config: &ExperimentConfig,
    seed: u64,
    radius_items: &[BitVector],
    writes: &[BitVector],
) -> Result<KanervaMemory, ExperimentError> {
    let mut memory = KanervaMemory::new(config.memory_config(seed))?;
    memory.resolve_radius(radius_items)?;
    for w in writes {
        memory.write(w)?;
    }
    Ok(memory)
}

/// Probes `parameters` over every record of `data` within one trial.
fn run_trial(
    data: &Dataset,
    config: &ExperimentConfig,
    parameters: &[usize],
    memory_seed: u64,
    probe_seed: u64,
    trial: usize,
) -> Result<TrialOutcome, ExperimentError> {
    let vectors = data.vectors();
    let ctx = ProbeContext {
        config,
        catalog: data.catalog(),
        names: data.records().iter().map(|r| r.name.as_str()).collect(),
        trial,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let mut tallies = vec![Tally::default(); data.width()];
    let radius;
    match config.corruption_mode {
        CorruptionMode::SingleBitRead | CorruptionMode::MultiBitRead(_) => {
            let extra = match config.corruption_mode {
                CorruptionMode::MultiBitRead(k) => k - 1,
                _ => 0,
            };
            let memory = build_memory(config, memory_seed, &vectors, &vectors)?;
            radius = memory.radius().expect("resolved");
            for &p in parameters {
                for (l, v) in vectors.iter().enumerate() {
                    let probe = corrupt(v, p, extra, &mut rng);
                    ctx.record(&mut tallies[p], memory.read(&probe), v, p, l)?;
                }
            }
        }
        CorruptionMode::WriteTime(k) => {
            let mut r = 0;
            for &p in parameters {
                let corrupted: Vec<BitVector> = vectors.iter().map(|v| corrupt(v, p, k - 1, &mut rng)).collect();
                let memory = build_memory(config, memory_seed, &vectors, &corrupted)?;
                r = memory.radius().expect("resolved");
                for (l, v) in vectors.iter().enumerate() {
                    ctx.record(&mut tallies[p], memory.read(v), v, p, l)?;
                }
            }
            radius = r;
        }
    }
    Ok(TrialOutcome { radius, tallies })
}

/// Collects per-trial outcomes in trial order; the first failing trial
/// (by index) determines the error.
fn collect_trials<F>(trials: usize, f: F) -> Result<Vec<TrialOutcome>, ExperimentError>
where
    F: Fn(usize) -> Result<TrialOutcome, ExperimentError> + Sync + Send,
{
    let outcomes: Vec<Result<TrialOutcome, ExperimentError>> = (0..trials).into_par_iter().map(&f).collect();
    outcomes.into_iter().collect()
}

fn score_parameters(
    catalog: &ParameterCatalog,
    prevalences: &[f64],
    outcomes: &[TrialOutcome],
    parameters: &[usize],
) -> Vec<ParameterScore> {
    parameters
        .iter()
        .map(|&p| {
            let means: Vec<f64> = outcomes.iter().filter_map(|o| o.tallies[p].mean()).collect();
            let agg = aggregate(&means);
            let entry = &catalog.entries()[p];
            ParameterScore {
                parameter_id: entry.id.clone(),
                label: entry.label.clone(),
                prevalence: prevalences[p],
                score_mean: agg.map(|a| a.0),
                score_std: agg.map(|a| a.1),
                trials: means.len(),
                probes: outcomes.iter().map(|o| o.tallies[p].probes).sum(),
                skipped_probes: outcomes.iter().map(|o| o.tallies[p].skipped).sum(),
                subset_size: None,
                subset_prevalence: None,
            }
        })
        .collect()
}

fn metadata(
    config: &ExperimentConfig,
    digest: String,
    rows: usize,
    synthetic_rows: Option<usize>,
    outcomes: &[TrialOutcome],
) -> RunMetadata {
    RunMetadata {
        config: config.clone(),
        master_seed: config.master_seed,
        dataset_digest: digest,
        dataset_rows: rows,
        synthetic_rows,
        dimension: config.sdm.dimension,
        radius_min: outcomes.iter().map(|o| o.radius).min(),
        radius_max: outcomes.iter().map(|o| o.radius).max(),
        total_probes: outcomes
            .iter()
            .flat_map(|o| &o.tallies)
            .map(|t| t.probes + t.skipped)
            .sum(),
        skipped_probes: outcomes.iter().flat_map(|o| &o.tallies).map(|t| t.skipped).sum(),
    }
}

/// Non-normalized corruption study over the whole dataset.
pub fn corruption_experiment(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<CorruptionResult, ExperimentError> {
    config.validate()?;
    config.check_width(dataset.width())?;
    let freqs = frequencies(dataset)?;
    let parameters: Vec<usize> = (0..dataset.width()).collect();
    let outcomes = collect_trials(config.trials, |t| {
        run_trial(
            dataset,
            config,
            &parameters,
            trial_memory_seed(config.master_seed, t),
            derive(config.master_seed, Purpose::Corruption, t as u64),
            t,
        )
    })?;
    Ok(CorruptionResult {
        parameters: score_parameters(dataset.catalog(), &freqs.frequencies, &outcomes, &parameters),
        metadata: metadata(config, dataset.digest(), dataset.len(), None, &outcomes),
    })
}

/// Random-data baseline: per trial, synthesize `rows` i.i.d. records
/// matching `freqs` and run the corruption procedure on them.
pub fn baseline_experiment(
    freqs: &FrequencyTable,
    rows: usize,
    config: &ExperimentConfig,
) -> Result<CorruptionResult, ExperimentError> {
    config.validate()?;
    config.check_width(freqs.frequencies.len())?;
    if rows == 0 {
        return Err(ExperimentError::Config("baseline needs at least one row".into()));
    }
    let parameters: Vec<usize> = (0..freqs.frequencies.len()).collect();
    let outcomes = collect_trials(config.trials, |t| {
        let data = synthesize_random(freqs, rows, derive(config.master_seed, Purpose::Baseline, t as u64));
        run_trial(
            &data,
            config,
            &parameters,
            trial_memory_seed(config.master_seed, t),
            derive(config.master_seed, Purpose::Corruption, t as u64),
            t,
        )
    })?;
    let digest = hex::encode(<sha2::Sha256 as sha2::Digest>::digest(freqs.to_csv().as_bytes()));
    Ok(CorruptionResult {
        parameters: score_parameters(&freqs.catalog, &freqs.frequencies, &outcomes, &parameters),
        metadata: metadata(config, digest, freqs.total, Some(rows), &outcomes),
    })
}

/// Prevalence-normalized study. See [`normalized_experiment_observed`].
pub fn normalized_experiment(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<NormalizedResult, ExperimentError> {
    normalized_experiment_observed(dataset, config, |_| {})
}

/// Prevalence-normalized study; `observe` sees every balanced subset drawn.
///
/// For each parameter and trial a fresh balanced subset of `config.size`
/// languages is drawn, written into a fresh memory, and only that
/// parameter is probed. Parameters whose strata are too small are listed in
/// `skipped`.
pub fn normalized_experiment_observed<F>(
    dataset: &Dataset,
    config: &ExperimentConfig,
    observe: F,
) -> Result<NormalizedResult, ExperimentError>
where
    F: Fn(&SubsetObservation) + Sync,
{
    config.validate()?;
    config.check_width(dataset.width())?;
    let freqs = frequencies(dataset)?;
    let width = dataset.width();

    let mut skipped = Vec::new();
    let mut eligible = Vec::new();
    for p in 0..width {
        // Eligibility depends only on stratum sizes, not on the seed.
        match balanced_subset(dataset, p, config.size, 0)? {
            Subset::Skipped(marker) => skipped.push(marker),
            Subset::Selected(_) => eligible.push(p),
        }
    }

    let jobs: Vec<(usize, usize)> = eligible
        .iter()
        .flat_map(|&p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Result<TrialOutcome, ExperimentError>> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let (subset_seed, memory_seed) = normalized_seeds(config.master_seed, p, t);
            let subset = match balanced_subset(dataset, p, config.size, subset_seed)? {
                Subset::Selected(s) => s,
                Subset::Skipped(_) => unreachable!("eligibility is seed independent"),
            };
            let ones = subset.column_ones(p);
            observe(&SubsetObservation {
                parameter_index: p,
                trial: t,
                size: subset.len(),
                ones,
                zeros: subset.len() - ones,
            });
            let probe_seed = derive(config.master_seed, Purpose::Corruption, normalized_index(p, t));
            run_trial(&subset, config, &[p], memory_seed, probe_seed, t)
        })
        .collect();
    let outcomes: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;

    let subset_prevalence = crate::dataset::balanced_strata(config.size).0 as f64 / config.size as f64;
    let mut parameters = Vec::with_capacity(eligible.len());
    for (k, &p) in eligible.iter().enumerate() {
        let chunk = &outcomes[k * config.trials..(k + 1) * config.trials];
        let mut score = score_parameters(dataset.catalog(), &freqs.frequencies, chunk, &[p]).remove(0);
        score.subset_size = Some(config.size);
        score.subset_prevalence = Some(subset_prevalence);
        parameters.push(score);
    }
    Ok(NormalizedResult {
        parameters,
        skipped,
        metadata: metadata(config, dataset.digest(), dataset.len(), None, &outcomes),
    })
}
