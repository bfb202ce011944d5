//! Language datasets over the 21-parameter word-order catalog.
//!
//! The canonical on-disk form is CSV with header
//! `language,01,02,...,20,A01` and one row per language; values are exactly
//! `0` or `1`. A JSON mirror of the same schema is also accepted:
//!
//! ```json
//! {"parameters": ["01", "02", "...", "A01"],
//!  "languages": [{"name": "English", "values": [1, 0, 1, "..."]}]}
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::BitVector;

/// The 21 parameters, in canonical column order.
pub const PARAMETERS: [(&str, &str); 21] = [
    ("01", "Subject-Verb"),
    ("02", "Verb-Subject"),
    ("03", "Verb-Object"),
    ("04", "Object-Verb"),
    ("05", "Subject-Verb-Object"),
    ("06", "Subject-Object-Verb"),
    ("07", "Verb-Subject-Object"),
    ("08", "Verb-Object-Subject"),
    ("09", "Object-Subject-Verb"),
    ("10", "Object-Verb-Subject"),
    ("11", "Adposition-Noun-Phrase"),
    ("12", "Noun-Phrase-Adposition"),
    ("13", "Adjective-Noun"),
    ("14", "Noun-Adjective"),
    ("15", "Numeral-Noun"),
    ("16", "Noun-Numeral"),
    ("17", "Demonstrative-Noun"),
    ("18", "Noun-Demonstrative"),
    ("19", "Possessor-Noun"),
    ("20", "Noun-Possessor"),
    ("A01", "Attributive-Adjective-Agreement"),
];

/// Published prevalence of each parameter in the reference language sample,
/// catalog order, as printed (8 significant digits).
pub const REFERENCE_FREQUENCIES: [f64; 21] = [
    0.64957267, 0.31623933, 0.61538464, 0.32478634, 0.56837606, 0.30769232, 0.1923077, 0.15811966, 0.12393162,
    0.10683761, 0.58974361, 0.2905983, 0.41025642, 0.52564102, 0.48290598, 0.38034189, 0.47435898, 0.38461539,
    0.38034189, 0.49145299, 0.46581197,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}, column {column}: value {value:?} is not 0 or 1")]
    NonBinaryValue { line: u64, column: String, value: String },
    #[error("duplicate language {0:?}")]
    DuplicateLanguage(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowLengthMismatch { line: u64, expected: usize, found: usize },
    #[error("line {line}: empty language name")]
    EmptyName { line: u64 },
    #[error("record {name:?} has {found} values, catalog has {expected}")]
    WidthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid catalog: {0}")]
    BadCatalog(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("parameter index {index} out of range for {width} parameters")]
    ParameterOutOfRange { index: usize, width: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCatalog {
    entries: Vec<Parameter>,
}

impl ParameterCatalog {
    /// The fixed 21-parameter catalog.
    pub fn standard() -> Self {
        Self {
            entries: PARAMETERS
                .iter()
                .map(|(id, label)| Parameter {
                    id: id.to_string(),
                    label: label.to_string(),
                })
                .collect(),
        }
    }

    /// Catalog with arbitrary entries, for toy experiments. Ids must be
    /// nonempty and unique.
    pub fn custom(entries: Vec<Parameter>) -> Result<Self, DatasetError> {
        if entries.is_empty() {
            return Err(DatasetError::BadCatalog("no parameters".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.id.is_empty() {
                return Err(DatasetError::BadCatalog("empty parameter id".into()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(DatasetError::BadCatalog(format!("duplicate id {:?}", e.id)));
            }
        }
        Ok(Self { entries })
    }

    /// `p01`, `p02`, ... catalog of the given width.
    pub fn numbered(width: usize) -> Self {
        Self::custom(
            (1..=width)
                .map(|i| Parameter {
                    id: format!("p{i:02}"),
                    label: format!("parameter {i}"),
                })
                .collect(),
        )
        .expect("numbered ids are unique")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Parameter] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&Parameter> {
        self.entries.get(index)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn is_standard(&self) -> bool {
        *self == Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageRecord {
    pub name: String,
    pub values: BitVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    catalog: ParameterCatalog,
    records: Vec<LanguageRecord>,
}

impl Dataset {
    /// Validates names (nonempty, pairwise distinct) and value widths.
    pub fn new(catalog: ParameterCatalog, records: Vec<LanguageRecord>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.name.trim().is_empty() {
                return Err(DatasetError::EmptyName { line: 0 });
            }
            if r.values.len() != catalog.len() {
                return Err(DatasetError::WidthMismatch {
                    name: r.name.clone(),
                    expected: catalog.len(),
                    found: r.values.len(),
                });
            }
            if !seen.insert(r.name.as_str()) {
                return Err(DatasetError::DuplicateLanguage(r.name.clone()));
            }
        }
        Ok(Self { catalog, records })
    }

    pub fn catalog(&self) -> &ParameterCatalog {
        &self.catalog
    }

    pub fn records(&self) -> &[LanguageRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn width(&self) -> usize {
        self.catalog.len()
    }

    pub fn vectors(&self) -> Vec<BitVector> {
        self.records.iter().map(|r| r.values.clone()).collect()
    }

    /// Canonical CSV form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once("language").chain(self.catalog.ids()).collect();
        w.write_record(&header).expect("write to Vec");
        for r in &self.records {
            let mut row = vec![r.name.clone()];
            row.extend(r.values.iter().map(|b| if b { "1".into() } else { "0".into() }));
            w.write_record(&row).expect("write to Vec");
        }
        String::from_utf8(w.into_inner().expect("flush Vec")).expect("CSV of UTF-8 input is UTF-8")
    }

    pub fn to_json(&self) -> String {
        let doc = JsonDataset {
            parameters: self.catalog.ids().map(str::to_string).collect(),
            languages: self
                .records
                .iter()
                .map(|r| JsonLanguage {
                    name: r.name.clone(),
                    values: r.values.iter().map(|b| serde_json::Value::from(b as u8)).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    /// SHA-256 of the canonical CSV form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv().as_bytes()))
    }

    /// Ones in column `index`.
    pub fn column_ones(&self, index: usize) -> usize {
        self.records.iter().filter(|r| r.values.get(index)).count()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    parameters: Vec<String>,
    languages: Vec<JsonLanguage>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonLanguage {
    name: String,
    values: Vec<serde_json::Value>,
}

fn check_header<'a>(fields: impl Iterator<Item = &'a str>, catalog: &ParameterCatalog) -> Result<(), DatasetError> {
    let fields: Vec<&str> = fields.collect();
    let expected: Vec<&str> = std::iter::once("language").chain(catalog.ids()).collect();
    if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
        return Err(DatasetError::BadHeader("empty input".into()));
    }
    if !fields[0].eq_ignore_ascii_case("language") {
        return Err(DatasetError::BadHeader(format!(
            "first column must be `language`, found {:?}",
            fields[0]
        )));
    }
    if fields.len() != expected.len() {
        return Err(DatasetError::BadHeader(format!(
            "expected {} parameter columns, found {}",
            expected.len() - 1,
            fields.len() - 1
        )));
    }
    for (got, want) in fields.iter().zip(&expected).skip(1) {
        if got != want {
            return Err(DatasetError::BadHeader(format!(
                "expected column {want:?}, found {got:?}"
            )));
        }
    }
    Ok(())
}

fn parse_bit(value: &str, line: u64, column: &str) -> Result<bool, DatasetError> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(DatasetError::NonBinaryValue {
            line,
            column: column.to_string(),
            value: value.to_string(),
        }),
    }
}

/// Parses the canonical CSV form against the standard catalog.
pub fn parse_dataset(text: &str) -> Result<Dataset, DatasetError> {
    parse_dataset_with(text, ParameterCatalog::standard())
}

/// Parses CSV against an explicit catalog.
pub fn parse_dataset_with(text: &str, catalog: ParameterCatalog) -> Result<Dataset, DatasetError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(DatasetError::BadHeader("empty input".into())),
        Some(r) => r.map_err(|e| DatasetError::Csv(e.to_string()))?,
    };
    check_header(header.iter(), &catalog)?;

    let width = catalog.len();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in rows {
        let row = row.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != width + 1 {
            return Err(DatasetError::RowLengthMismatch {
                line,
                expected: width + 1,
                found: row.len(),
            });
        }
        let name = row[0].to_string();
        if name.is_empty() {
            return Err(DatasetError::EmptyName { line });
        }
        let mut values = BitVector::zeros(width);
        for (j, (field, param)) in row.iter().skip(1).zip(catalog.entries()).enumerate() {
            if parse_bit(field, line, &param.id)? {
                values.set(j, true);
            }
        }
        if !seen.insert(name.clone()) {
            return Err(DatasetError::DuplicateLanguage(name));
        }
        records.push(LanguageRecord { name, values });
    }
    Ok(Dataset { catalog, records })
}

/// Parses the JSON mirror against the standard catalog.
pub fn parse_dataset_json(text: &str) -> Result<Dataset, DatasetError> {
    let doc: JsonDataset = serde_json::from_str(text).map_err(|e| DatasetError::Json(e.to_string()))?;
    let catalog = ParameterCatalog::standard();
    check_header(
        std::iter::once("language").chain(doc.parameters.iter().map(String::as_str)),
        &catalog,
    )?;
    let width = catalog.len();
    let mut records = Vec::with_capacity(doc.languages.len());
    let mut seen = HashSet::new();
    for (k, lang) in doc.languages.into_iter().enumerate() {
        // Report JSON positions as 1-based record numbers.
        let line = k as u64 + 1;
        let name = lang.name.trim().to_string();
        if name.is_empty() {
            return Err(DatasetError::EmptyName { line });
        }
        if lang.values.len() != width {
            return Err(DatasetError::RowLengthMismatch {
                line,
                expected: width,
                found: lang.values.len(),
            });
        }
        let mut values = BitVector::zeros(width);
        for (j, (v, param)) in lang.values.iter().zip(catalog.entries()).enumerate() {
            let bit = match v.as_u64() {
                Some(0) => false,
                Some(1) => true,
                _ => {
                    return Err(DatasetError::NonBinaryValue {
                        line,
                        column: param.id.clone(),
                        value: v.to_string(),
                    })
                }
            };
            if bit {
                values.set(j, true);
            }
        }
        if !seen.insert(name.clone()) {
            return Err(DatasetError::DuplicateLanguage(name));
        }
        records.push(LanguageRecord { name, values });
    }
    Ok(Dataset { catalog, records })
}

/// Dispatches on the first non-whitespace character: `{` selects JSON,
/// anything else CSV.
pub fn parse_dataset_auto(text: &str) -> Result<Dataset, DatasetError> {
    if text.trim_start_matches('\u{feff}').trim_start().starts_with('{') {
        parse_dataset_json(text)
    } else {
        parse_dataset(text)
    }
}

/// Per-parameter prevalence: the fraction of records with value 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub catalog: ParameterCatalog,
    pub ones: Vec<usize>,
    pub total: usize,
    pub frequencies: Vec<f64>,
}

impl FrequencyTable {
    /// Table with explicit frequencies and no backing counts.
    pub fn from_frequencies(catalog: ParameterCatalog, frequencies: Vec<f64>) -> Result<Self, DatasetError> {
        if frequencies.len() != catalog.len() {
            return Err(DatasetError::BadCatalog(format!(
                "{} frequencies for {} parameters",
                frequencies.len(),
                catalog.len()
            )));
        }
        if let Some(f) = frequencies.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(DatasetError::BadCatalog(format!("frequency {f} outside [0, 1]")));
        }
        Ok(Self {
            ones: Vec::new(),
            total: 0,
            catalog,
            frequencies,
        })
    }

    /// The published reference frequencies over the standard catalog.
    pub fn reference() -> Self {
        Self::from_frequencies(ParameterCatalog::standard(), REFERENCE_FREQUENCIES.to_vec())
            .expect("reference table is valid")
    }

    /// `parameter_id,label,frequency` with 8 decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter_id,label,frequency\n");
        for (p, f) in self.catalog.entries().iter().zip(&self.frequencies) {
            writeln!(out, "{},{},{:.8}", p.id, p.label, f).expect("write to String");
        }
        out
    }
}

pub fn frequencies(dataset: &Dataset) -> Result<FrequencyTable, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let total = dataset.len();
    let ones: Vec<usize> = (0..dataset.width()).map(|j| dataset.column_ones(j)).collect();
    let frequencies = ones.iter().map(|&k| k as f64 / total as f64).collect();
    Ok(FrequencyTable {
        catalog: dataset.catalog.clone(),
        ones,
        total,
        frequencies,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipMarker {
    pub parameter_index: usize,
    pub parameter_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subset {
    Selected(Dataset),
    Skipped(SkipMarker),
}

/// Stratum sizes for a balanced subset: `(ceil(size/2), floor(size/2))`
/// records with value 1 and 0 respectively.
pub fn balanced_strata(size: usize) -> (usize, usize) {
    (size.div_ceil(2), size / 2)
}

/// Uniformly samples `size` records with exactly `ceil(size/2)` ones and
/// `floor(size/2)` zeros at `parameter_index`. Records keep their dataset
/// order. Returns [`Subset::Skipped`] when either stratum is too small.
pub fn balanced_subset(
    dataset: &Dataset,
    parameter_index: usize,
    size: usize,
    seed: u64,
) -> Result<Subset, DatasetError> {
    if parameter_index >= dataset.width() {
        return Err(DatasetError::ParameterOutOfRange {
            index: parameter_index,
            width: dataset.width(),
        });
    }
    let parameter_id = dataset.catalog.entries[parameter_index].id.clone();
    let (need_ones, need_zeros) = balanced_strata(size);
    let (ones, zeros): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| dataset.records[i].values.get(parameter_index));
    if ones.len() < need_ones || zeros.len() < need_zeros {
        return Ok(Subset::Skipped(SkipMarker {
            parameter_index,
            parameter_id,
            reason: format!(
                "needs {need_ones} languages with value 1 and {need_zeros} with value 0, has {} and {}",
                ones.len(),
                zeros.len()
            ),
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, ones.len(), need_ones)
        .into_iter()
        .map(|k| ones[k])
        .chain(
            index::sample(&mut rng, zeros.len(), need_zeros)
                .into_iter()
                .map(|k| zeros[k]),
        )
        .collect();
    picked.sort_unstable();
    Ok(Subset::Selected(Dataset {
        catalog: dataset.catalog.clone(),
        records: picked.into_iter().map(|i| dataset.records[i].clone()).collect(),
    }))
}

/// Synthetic record names: `rand-0001`, `rand-0002`, ...
pub fn synthetic_name(i: usize) -> String {
    format!("rand-{:04}", i + 1)
}

/// `rows` records whose bit `j` is an independent Bernoulli draw with
/// probability `freqs[j]`.
pub fn synthesize_random(freqs: &FrequencyTable, rows: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = freqs.frequencies.len();
    let records = (0..rows)
        .map(|i| {
            let mut values = BitVector::zeros(width);
            for (j, &p) in freqs.frequencies.iter().enumerate() {
                if rng.gen::<f64>() < p {
                    values.set(j, true);
                }
            }
            LanguageRecord {
                name: synthetic_name(i),
                values,
            }
        })
        .collect();
    Dataset {
        catalog: freqs.catalog.clone(),
        records,
    }
}

/// One record per name; column `j` has exactly `round(freqs[j] * rows)`
/// ones at uniformly random rows, independently per column.
pub fn synthesize_exact_marginals(
    freqs: &FrequencyTable,
    names: &[String],
    seed: u64,
) -> Result<Dataset, DatasetError> {
    let rows = names.len();
    let width = freqs.frequencies.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![BitVector::zeros(width); rows];
    for (j, &p) in freqs.frequencies.iter().enumerate() {
        let k = ((p * rows as f64).round() as usize).min(rows);
        for r in index::sample(&mut rng, rows, k) {
            values[r].set(j, true);
        }
    }
    Dataset::new(
        freqs.catalog.clone(),
        names
            .iter()
            .zip(values)
            .map(|(name, values)| LanguageRecord {
                name: name.clone(),
                values,
            })
            .collect(),
    )
}

/// Language names used for the shipped example dataset.
const EXAMPLE_NAMES: &str = include_str!("../data/appendix_languages.txt");

/// Name of the extra row that brings the example dataset to 166 records.
pub const EXAMPLE_PLACEHOLDER: &str = "Unlisted-166";

pub const EXAMPLE_SEED: u64 = 166;

/// The shipped example dataset (`data/example_languages.csv`): real
/// language names with synthetic values whose column counts match the
/// reference frequencies at 166 rows.
pub fn example_dataset() -> Dataset {
    let names: Vec<String> = EXAMPLE_NAMES
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .chain(std::iter::once(EXAMPLE_PLACEHOLDER.to_string()))
        .collect();
    synthesize_exact_marginals(&FrequencyTable::reference(), &names, EXAMPLE_SEED).expect("example names are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header() -> String {
        let ids: Vec<&str> = PARAMETERS.iter().map(|p| p.0).collect();
        format!("language,{}", ids.join(","))
    }

    const ENGLISH: &str = "English,1,0,1,0,1,0,0,0,0,0,1,0,1,1,1,0,1,0,1,0,0";

    /// One-column dataset with `ones` leading ones out of `total` rows.
    fn toy_dataset(ones: usize, total: usize) -> Dataset {
        let records = (0..total)
            .map(|i| LanguageRecord {
                name: format!("L{i}"),
                values: BitVector::from_bools(&[i < ones]),
            })
            .collect();
        Dataset::new(ParameterCatalog::numbered(1), records).unwrap()
    }

    #[test]
    fn catalog_is_fixed() {
        let c = ParameterCatalog::standard();
        assert_eq!(c.len(), 21);
        assert_eq!(c.get(0).unwrap().id, "01");
        assert_eq!(c.get(19).unwrap().label, "Noun-Possessor");
        assert_eq!(c.get(20).unwrap().id, "A01");
        let ids: HashSet<_> = c.ids().collect();
        assert_eq!(ids.len(), 21);
    }

    #[test]
    fn parses_single_english_row() {
        let text = format!("{}\n{}\n", header(), ENGLISH);
        let d = parse_dataset(&text).unwrap();
        assert_eq!(d.len(), 1);
        let r = &d.records()[0];
        assert_eq!(r.name, "English");
        // 01 Subject-Verb 1, 02 Verb-Subject 0, 03 Verb-Object 1, 04 Object-Verb 0, A01 agreement 0
        assert!(r.values.get(0) && !r.values.get(1) && r.values.get(2) && !r.values.get(3));
        assert!(!r.values.get(20));
    }

    #[test]
    fn trims_whitespace() {
        let text = format!(
            "{}\n  English , 1,0,1,0,1,0,0,0,0,0,1,0,1,1,1,0,1,0,1,0, 0 \n",
            header().replace(',', " , ")
        );
        let d = parse_dataset(&text).unwrap();
        assert_eq!(d.records()[0].name, "English");
    }

    #[test]
    fn rejects_non_binary() {
        let text = format!(
            "{}\n{}\nItalian,1,1,1,0,1,0,0,0,0,0,1,0,1,1,1,0,1,0,1,0,2\n",
            header(),
            ENGLISH
        );
        assert_eq!(
            parse_dataset(&text).unwrap_err(),
            DatasetError::NonBinaryValue {
                line: 3,
                column: "A01".into(),
                value: "2".into()
            }
        );
    }

    #[test]
    fn rejects_duplicate_language() {
        let row = "Italian,1,1,1,0,1,0,0,0,0,0,1,0,1,1,1,0,1,0,1,0,1";
        let text = format!("{}\n{row}\n{row}\n", header());
        assert_eq!(
            parse_dataset(&text).unwrap_err(),
            DatasetError::DuplicateLanguage("Italian".into())
        );
    }

    #[test]
    fn rejects_short_row() {
        let text = format!("{}\nEnglish,1,0\n", header());
        assert_eq!(
            parse_dataset(&text).unwrap_err(),
            DatasetError::RowLengthMismatch {
                line: 2,
                expected: 22,
                found: 3
            }
        );
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(parse_dataset(""), Err(DatasetError::BadHeader(_))));
        assert!(matches!(parse_dataset("\n\n"), Err(DatasetError::BadHeader(_))));
        assert!(matches!(parse_dataset("name,01\n"), Err(DatasetError::BadHeader(_))));
        let swapped = header().replace("01,02", "02,01");
        assert!(matches!(parse_dataset(&swapped), Err(DatasetError::BadHeader(_))));
        assert!(matches!(
            parse_dataset("language,01,02\n"),
            Err(DatasetError::BadHeader(_))
        ));
    }

    #[test]
    fn header_only_is_an_empty_dataset() {
        let d = parse_dataset(&header()).unwrap();
        assert!(d.is_empty());
        assert_eq!(frequencies(&d), Err(DatasetError::EmptyDataset));
    }

    #[test]
    fn json_mirror() {
        let text = format!("{}\n{}\n", header(), ENGLISH);
        let d = parse_dataset(&text).unwrap();
        assert_eq!(parse_dataset_json(&d.to_json()).unwrap(), d);
        assert_eq!(parse_dataset_auto(&d.to_json()).unwrap(), d);
        let bad = d.to_json().replacen("1,", "2,", 1);
        assert!(matches!(
            parse_dataset_json(&bad),
            Err(DatasetError::NonBinaryValue { .. })
        ));
        assert!(matches!(parse_dataset_json("{"), Err(DatasetError::Json(_))));
    }

    #[test]
    fn frequency_cases() {
        let f = frequencies(&toy_dataset(0, 7)).unwrap();
        assert_eq!(f.frequencies, [0.0]);
        let f = frequencies(&toy_dataset(152, 234)).unwrap();
        assert!((f.frequencies[0] - 0.64957267).abs() < 1e-6);
        assert_eq!(f.ones, [152]);
        let f = frequencies(&toy_dataset(45, 234)).unwrap();
        assert!((f.frequencies[0] - 0.1923077).abs() < 1e-6);
    }

    #[test]
    fn frequency_csv_precision() {
        let f = frequencies(&toy_dataset(152, 234)).unwrap();
        assert_eq!(f.to_csv(), "parameter_id,label,frequency\np01,parameter 1,0.64957265\n");
    }

    #[test]
    fn balanced_subset_counts() {
        let d = toy_dataset(100, 166);
        match balanced_subset(&d, 0, 95, 1).unwrap() {
            Subset::Selected(s) => {
                assert_eq!(s.len(), 95);
                assert_eq!(s.column_ones(0), 48);
            }
            Subset::Skipped(m) => panic!("unexpected skip {m:?}"),
        }
        let d = toy_dataset(30, 166);
        assert!(matches!(
            balanced_subset(&d, 0, 95, 1).unwrap(),
            Subset::Skipped(SkipMarker { parameter_index: 0, .. })
        ));
        let d = toy_dataset(2, 4);
        assert_eq!(balanced_subset(&d, 0, 4, 9).unwrap(), Subset::Selected(d.clone()));
        assert!(matches!(
            balanced_subset(&d, 1, 4, 9),
            Err(DatasetError::ParameterOutOfRange { .. })
        ));
    }

    #[test]
    fn skip_needs_both_strata() {
        // 48 ones are enough, 46 zeros are not
        let d = toy_dataset(48, 94);
        assert!(matches!(balanced_subset(&d, 0, 95, 0).unwrap(), Subset::Skipped(_)));
        let d = toy_dataset(48, 95);
        assert!(matches!(balanced_subset(&d, 0, 95, 0).unwrap(), Subset::Selected(_)));
    }

    #[test]
    fn synthesize_extremes() {
        let cat = ParameterCatalog::standard();
        let zeros = FrequencyTable::from_frequencies(cat.clone(), vec![0.0; 21]).unwrap();
        let ones = FrequencyTable::from_frequencies(cat, vec![1.0; 21]).unwrap();
        assert!(synthesize_random(&zeros, 50, 3)
            .records()
            .iter()
            .all(|r| r.values.count_ones() == 0));
        assert!(synthesize_random(&ones, 50, 3)
            .records()
            .iter()
            .all(|r| r.values.count_ones() == 21));
        let d = synthesize_random(&ones, 2, 3);
        assert_eq!(d.records()[1].name, "rand-0002");
        assert_eq!(
            synthesize_random(&FrequencyTable::reference(), 20, 5),
            synthesize_random(&FrequencyTable::reference(), 20, 5)
        );
    }

    #[test]
    fn synthesize_random_matches_binomial_model() {
        // Oracle: per column, |empirical - p| <= 4 * sqrt(p(1-p)/rows).
        let freqs = FrequencyTable::reference();
        let rows = 166;
        let mut good_runs = 0;
        for seed in 0..30 {
            let f = frequencies(&synthesize_random(&freqs, rows, seed)).unwrap();
            let ok = f.frequencies.iter().zip(&freqs.frequencies).all(|(e, p)| {
                let sigma = (p * (1.0 - p) / rows as f64).sqrt();
                (e - p).abs() <= 4.0 * sigma
            });
            good_runs += ok as usize;
        }
        assert!(good_runs >= 29, "{good_runs}/30 runs within 4 standard errors");
    }

    #[test]
    fn synthesize_random_converges() {
        let freqs = FrequencyTable::reference();
        let mad = |rows| {
            let f = frequencies(&synthesize_random(&freqs, rows, 11)).unwrap();
            f.frequencies
                .iter()
                .zip(&freqs.frequencies)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 21.0
        };
        assert!(mad(10_000) < mad(100));
        assert!(mad(10_000) < 0.01);
    }

    #[test]
    fn exact_marginals() {
        let names: Vec<String> = (0..166).map(synthetic_name).collect();
        let d = synthesize_exact_marginals(&FrequencyTable::reference(), &names, 1).unwrap();
        let f = frequencies(&d).unwrap();
        for (k, p) in f.ones.iter().zip(REFERENCE_FREQUENCIES) {
            assert_eq!(*k, (p * 166.0).round() as usize);
        }
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        let name = "[A-Za-z][A-Za-z ,'()\"é-]{0,12}[A-Za-z)]";
        proptest::collection::btree_map(name, proptest::collection::vec(any::<bool>(), 21), 0..12).prop_map(|m| {
            let records = m
                .into_iter()
                .map(|(name, bits)| LanguageRecord {
                    name,
                    values: BitVector::from_bools(&bits),
                })
                .collect();
            Dataset::new(ParameterCatalog::standard(), records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn csv_and_json_roundtrip(d in arb_dataset()) {
            prop_assert_eq!(&parse_dataset(&d.to_csv()).unwrap(), &d);
            prop_assert_eq!(&parse_dataset_json(&d.to_json()).unwrap(), &d);
        }

        #[test]
        fn balanced_subset_exact_strata(ones in 0usize..60, zeros in 0usize..60, size in 1usize..60, seed in any::<u64>()) {
            let d = toy_dataset(ones, ones + zeros);
            let (need1, need0) = balanced_strata(size);
            match balanced_subset(&d, 0, size, seed).unwrap() {
                Subset::Selected(s) => {
                    prop_assert!(ones >= need1 && zeros >= need0);
                    prop_assert_eq!(s.len(), size);
                    prop_assert_eq!(s.column_ones(0), need1);
                    let f = frequencies(&s).unwrap();
                    prop_assert_eq!(f.frequencies[0], need1 as f64 / size as f64);
                }
                Subset::Skipped(_) => prop_assert!(ones < need1 || zeros < need0),
            }
        }
    }
}
