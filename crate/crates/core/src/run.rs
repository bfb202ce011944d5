//! Reproducible runs: resolved settings, execution, atomic output files and
//! the manifest that allows a run to be replayed.
//!
//! A run writes `<kind>.json` and/or `<kind>.csv` plus
//! `<kind>.manifest.json` into the output directory. The result payloads
//! carry no timestamp, so equal manifests yield byte-identical payloads.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{frequencies, parse_dataset_auto, Dataset, DatasetError, FrequencyTable};
use crate::experiments::{
    baseline_experiment, corruption_experiment, normalized_experiment, CorruptionMode, EmptySpherePolicy,
    ExperimentConfig, ExperimentError,
};
use crate::results::{ExperimentKind, ResultDocument};
use crate::sdm::{RadiusPolicy, SdmConfig, SdmError, TieBreak};

pub const MANIFEST_VERSION: u32 = 1;

/// Row count used by a baseline run over the reference table when no
/// dataset is given.
pub const REFERENCE_ROWS: usize = 166;

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const ABORT: i32 = 4;
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Data { path: String, message: String },
    #[error("{0}")]
    Abort(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => exit::USAGE,
            RunError::Data { .. } => exit::DATA,
            RunError::Abort(_) => exit::ABORT,
        }
    }

    fn data(path: &Path, e: impl fmt::Display) -> Self {
        RunError::Data {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn from_experiment(e: ExperimentError, data: Option<&Path>) -> Self {
        let data_err = |msg: String| RunError::Data {
            path: data.map_or_else(|| "<reference>".into(), |p| p.display().to_string()),
            message: msg,
        };
        match e {
            ExperimentError::Config(m) => RunError::Usage(m),
            ExperimentError::Dataset(d) => data_err(d.to_string()),
            ExperimentError::EmptyAccessSphere { .. } => RunError::Abort(e.to_string()),
            ExperimentError::Memory(m) => match m {
                SdmError::InsufficientItems { .. } | SdmError::DimensionMismatch { .. } => data_err(m.to_string()),
                SdmError::EmptyAccessSphere { .. } => RunError::Abort(m.to_string()),
                _ => RunError::Usage(m.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "both" => Ok(OutputFormat::Both),
            _ => Err(format!("invalid format {s:?} (expected json, csv or both)")),
        }
    }
}

/// Everything a run depends on besides the dataset bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub kind: ExperimentKind,
    /// Required for corruption and normalized runs; a baseline run without
    /// a dataset uses the reference frequency table.
    pub data: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub hard_locations: usize,
    pub radius: RadiusPolicy,
    pub tie_break: TieBreak,
    pub counter_bound: Option<u32>,
    pub mode: CorruptionMode,
    pub size: usize,
    pub rows: Option<usize>,
    pub on_empty: EmptySpherePolicy,
    pub format: OutputFormat,
}

impl RunSettings {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            data: None,
            seed: 0,
            trials: ExperimentConfig::DEFAULT_TRIALS,
            hard_locations: SdmConfig::DEFAULT_HARD_LOCATIONS,
            radius: RadiusPolicy::QuarterItemMedian,
            tie_break: TieBreak::Zero,
            counter_bound: None,
            mode: CorruptionMode::SingleBitRead,
            size: ExperimentConfig::DEFAULT_SIZE,
            rows: None,
            on_empty: EmptySpherePolicy::Skip,
            format: OutputFormat::Json,
        }
    }

    pub fn experiment_config(&self, dimension: usize) -> ExperimentConfig {
        let mut sdm = SdmConfig::new(dimension, self.hard_locations)
            .with_radius(self.radius)
            .with_tie_break(self.tie_break);
        sdm.counter_bound = self.counter_bound;
        ExperimentConfig {
            sdm,
            trials: self.trials,
            corruption_mode: self.mode,
            size: self.size,
            master_seed: self.seed,
            empty_sphere: self.on_empty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub settings: RunSettings,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub dataset_digest: String,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifests serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let m: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if m.schema_version != MANIFEST_VERSION {
            return Err(format!(
                "manifest schema version {} is not supported (expected {MANIFEST_VERSION})",
                m.schema_version
            ));
        }
        Ok(m)
    }
}

/// A completed run: the document plus the manifest describing it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub document: ResultDocument,
    pub manifest: RunManifest,
}

/// Reads and parses a dataset file (CSV or JSON).
pub fn load_dataset(path: &Path) -> Result<Dataset, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::data(path, e))?;
    parse_dataset_auto(&text).map_err(|e| RunError::data(path, e))
}

fn require_data(settings: &RunSettings) -> Result<&Path, RunError> {
    settings
        .data
        .as_deref()
        .ok_or_else(|| RunError::Usage(format!("run {} requires --data", settings.kind.name())))
}

/// Runs the experiment described by `settings`.
pub fn execute(settings: &RunSettings) -> Result<RunOutput, RunError> {
    let data = settings.data.as_deref();
    let (document, config) = match settings.kind {
        ExperimentKind::Corruption | ExperimentKind::Normalized => {
            let path = require_data(settings)?;
            let dataset = load_dataset(path)?;
            if dataset.is_empty() {
                return Err(RunError::data(path, DatasetError::EmptyDataset));
            }
            let config = settings.experiment_config(dataset.width());
            let doc = if settings.kind == ExperimentKind::Corruption {
                corruption_experiment(&dataset, &config)
                    .map(|r| ResultDocument::from_corruption(ExperimentKind::Corruption, r))
            } else {
                normalized_experiment(&dataset, &config).map(ResultDocument::from_normalized)
            };
            (doc.map_err(|e| RunError::from_experiment(e, data))?, config)
        }
        ExperimentKind::Baseline => {
            let (freqs, default_rows) = match data {
                Some(path) => {
                    let dataset = load_dataset(path)?;
                    let freqs = frequencies(&dataset).map_err(|e| RunError::data(path, e))?;
                    (freqs, dataset.len())
                }
                None => (FrequencyTable::reference(), REFERENCE_ROWS),
            };
            let config = settings.experiment_config(freqs.frequencies.len());
            let rows = settings.rows.unwrap_or(default_rows);
            let r = baseline_experiment(&freqs, rows, &config).map_err(|e| RunError::from_experiment(e, data))?;
            (ResultDocument::from_corruption(ExperimentKind::Baseline, r), config)
        }
    };
    let manifest = RunManifest {
        schema_version: MANIFEST_VERSION,
        command: format!("run {}", settings.kind.name()),
        settings: settings.clone(),
        master_seed: settings.seed,
        dataset_digest: document.metadata.dataset_digest.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config,
    };
    Ok(RunOutput { document, manifest })
}

/// Re-executes a manifest's run. Fails if the dataset no longer matches
/// the recorded digest.
pub fn replay(manifest: &RunManifest) -> Result<RunOutput, RunError> {
    let out = execute(&manifest.settings)?;
    if out.manifest.dataset_digest != manifest.dataset_digest {
        let path = manifest
            .settings
            .data
            .as_deref()
            .map_or_else(|| "<reference>".into(), |p| p.display().to_string());
        return Err(RunError::Data {
            path,
            message: format!(
                "dataset digest {} does not match the manifest ({})",
                out.manifest.dataset_digest, manifest.dataset_digest
            ),
        });
    }
    Ok(out)
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes the result files and manifest into `out_dir`, creating it if
/// needed. Returns the paths written.
pub fn write_outputs(out: &RunOutput, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let abort = |p: &Path, e: std::io::Error| RunError::Abort(format!("cannot write {}: {e}", p.display()));
    std::fs::create_dir_all(out_dir).map_err(|e| abort(out_dir, e))?;
    let kind = out.document.kind.name();
    let format = out.manifest.settings.format;
    let mut files = Vec::new();
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        files.push((out_dir.join(format!("{kind}.json")), out.document.to_json()));
    }
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        files.push((out_dir.join(format!("{kind}.csv")), out.document.to_csv()));
    }
    files.push((out_dir.join(format!("{kind}.manifest.json")), out.manifest.to_json()));
    let mut written = Vec::new();
    for (path, contents) in files {
        write_atomic(&path, &contents).map_err(|e| abort(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> RunSettings {
        RunSettings {
            trials: 2,
            hard_locations: 500,
            radius: RadiusPolicy::Fixed(7),
            rows: Some(12),
            ..RunSettings::new(kind)
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let out = execute(&small(ExperimentKind::Baseline)).unwrap();
        let text = out.manifest.to_json();
        assert_eq!(RunManifest::from_json(&text).unwrap(), out.manifest);
        assert!(RunManifest::from_json("{}").is_err());
        let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 7", 1);
        assert!(RunManifest::from_json(&bumped).unwrap_err().contains("version 7"));
    }

    #[test]
    fn replay_reproduces_payload() {
        let out = execute(&small(ExperimentKind::Baseline)).unwrap();
        let again = replay(&out.manifest).unwrap();
        assert_eq!(again.document.to_json(), out.document.to_json());
    }

    #[test]
    fn error_classes() {
        let e = execute(&small(ExperimentKind::Corruption)).unwrap_err();
        assert_eq!(e.exit_code(), exit::USAGE);
        let mut s = small(ExperimentKind::Corruption);
        s.data = Some(PathBuf::from("/nonexistent/data.csv"));
        assert_eq!(execute(&s).unwrap_err().exit_code(), exit::DATA);
        let mut s = small(ExperimentKind::Baseline);
        s.trials = 0;
        assert_eq!(execute(&s).unwrap_err().exit_code(), exit::USAGE);
        let mut s = small(ExperimentKind::Baseline);
        s.hard_locations = 3;
        s.radius = RadiusPolicy::Fixed(0);
        s.on_empty = EmptySpherePolicy::Abort;
        assert_eq!(execute(&s).unwrap_err().exit_code(), exit::ABORT);
    }

    #[test]
    fn atomic_writes_and_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = small(ExperimentKind::Baseline);
        s.format = OutputFormat::Both;
        let out = execute(&s).unwrap();
        let written = write_outputs(&out, &dir.path().join("nested")).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["baseline.json", "baseline.csv", "baseline.manifest.json"]);
        let json = std::fs::read_to_string(&written[0]).unwrap();
        assert_eq!(json, out.document.to_json());
        // only the three outputs, no leftover temporaries
        assert_eq!(std::fs::read_dir(dir.path().join("nested")).unwrap().count(), 3);
    }

    #[test]
    fn unwritable_output_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let out = execute(&small(ExperimentKind::Baseline)).unwrap();
        let e = write_outputs(&out, &blocker.join("sub")).unwrap_err();
        assert_eq!(e.exit_code(), exit::ABORT);
    }
}
