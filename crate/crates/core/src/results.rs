//! Versioned result documents written by `sdmlab run` and read back by
//! `sdmlab report`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SkipMarker;
use crate::experiments::{CorruptionResult, NormalizedResult, ParameterScore, RunMetadata};
use crate::stats::{prevalence_recoverability, PrevalenceStats};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResultError {
    #[error("result file is not valid JSON for this tool: {0}")]
    Malformed(String),
    #[error("result schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u64, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Corruption,
    Normalized,
    Baseline,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Corruption => "corruption",
            ExperimentKind::Normalized => "normalized",
            ExperimentKind::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub metadata: RunMetadata,
    pub parameters: Vec<ParameterScore>,
    pub skipped: Vec<SkipMarker>,
    /// Prevalence/recoverability correlations; absent when fewer than three
    /// parameters were scored or the input was degenerate (reason in
    /// `stats_note`).
    pub stats: Option<PrevalenceStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_note: Option<String>,
}

/// Statistics over the parameters that have a score.
pub fn parameter_stats(parameters: &[ParameterScore]) -> Result<PrevalenceStats, crate::stats::StatsError> {
    let (prev, scores): (Vec<f64>, Vec<f64>) = parameters
        .iter()
        .filter_map(|p| p.score_mean.map(|s| (p.prevalence, s)))
        .unzip();
    prevalence_recoverability(&prev, &scores)
}

impl ResultDocument {
    fn build(
        kind: ExperimentKind,
        metadata: RunMetadata,
        parameters: Vec<ParameterScore>,
        skipped: Vec<SkipMarker>,
    ) -> Self {
        let (stats, stats_note) = match parameter_stats(&parameters) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            metadata,
            parameters,
            skipped,
            stats,
            stats_note,
        }
    }

    pub fn from_corruption(kind: ExperimentKind, r: CorruptionResult) -> Self {
        Self::build(kind, r.metadata, r.parameters, Vec::new())
    }

    pub fn from_normalized(r: NormalizedResult) -> Self {
        Self::build(ExperimentKind::Normalized, r.metadata, r.parameters, r.skipped)
    }

    /// Pretty JSON with a trailing newline. Byte-stable for equal inputs.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result documents serialize");
        s.push('\n');
        s
    }

    /// Checks `schema_version` before decoding the rest.
    pub fn from_json(text: &str) -> Result<Self, ResultError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ResultError::Malformed(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ResultError::Malformed("missing schema_version".into()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(ResultError::SchemaMismatch {
                found: version,
                expected: SCHEMA_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| ResultError::Malformed(e.to_string()))
    }

    /// `parameter_id,label,prevalence,score_mean,score_std,trials`, then a
    /// `# skipped` block (one `# id: reason` line each) when any parameter
    /// was skipped. Unscored parameters have empty score fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter_id,label,prevalence,score_mean,score_std,trials\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.parameters {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.parameter_id,
                csv_field(&p.label),
                p.prevalence,
                opt(p.score_mean),
                opt(p.score_std),
                p.trials
            )
            .expect("write to String");
        }
        if !self.skipped.is_empty() {
            out.push_str("# skipped\n");
            for s in &self.skipped {
                writeln!(out, "# {}: {}", s.parameter_id, s.reason).expect("write to String");
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FrequencyTable;
    use crate::experiments::{baseline_experiment, ExperimentConfig};
    use crate::sdm::RadiusPolicy;

    fn small_doc() -> ResultDocument {
        let mut c = ExperimentConfig::new(21);
        c.sdm.hard_location_count = 200;
        c.sdm.radius_policy = RadiusPolicy::Fixed(8);
        c.trials = 2;
        let r = baseline_experiment(&FrequencyTable::reference(), 20, &c).unwrap();
        ResultDocument::from_corruption(ExperimentKind::Baseline, r)
    }

    #[test]
    fn json_roundtrip_and_schema_check() {
        let doc = small_doc();
        let text = doc.to_json();
        assert_eq!(ResultDocument::from_json(&text).unwrap(), doc);
        let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
        assert_eq!(
            ResultDocument::from_json(&bumped),
            Err(ResultError::SchemaMismatch { found: 99, expected: 1 })
        );
        assert!(matches!(
            ResultDocument::from_json("{not json"),
            Err(ResultError::Malformed(_))
        ));
        assert!(matches!(
            ResultDocument::from_json("{}"),
            Err(ResultError::Malformed(_))
        ));
        assert!(matches!(
            ResultDocument::from_json("{\"schema_version\": 1}"),
            Err(ResultError::Malformed(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let mut doc = small_doc();
        doc.skipped.push(SkipMarker {
            parameter_index: 6,
            parameter_id: "07".into(),
            reason: "too few".into(),
        });
        let csv = doc.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "parameter_id,label,prevalence,score_mean,score_std,trials");
        assert_eq!(lines.len(), 1 + 21 + 2);
        assert!(lines[1].starts_with("01,Subject-Verb,0.64957267,"));
        assert_eq!(lines[23], "# 07: too few");
    }
}
