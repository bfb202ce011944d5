//! Fuzz target bodies, shared by the libFuzzer binaries and the stable
//! corpus replay test.

use sdmlab::dataset::{parse_dataset, parse_dataset_auto, parse_dataset_json};
use sdmlab::experiments::CorruptionMode;
use sdmlab::report::{render_csv, render_svg, ReportKind};
use sdmlab::results::ResultDocument;
use sdmlab::run::RunManifest;
use sdmlab::sdm::RadiusPolicy;
use sdmlab::BitVector;

pub fn dataset_csv(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ds) = parse_dataset(text) {
        let again = parse_dataset(&ds.to_csv()).expect("serialized dataset reparses");
        assert_eq!(again, ds);
    }
}

pub fn dataset_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_dataset_auto(text);
    if let Ok(ds) = parse_dataset_json(text) {
        let again = parse_dataset_json(&ds.to_json()).expect("serialized dataset reparses");
        assert_eq!(again, ds);
    }
}

pub fn result_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = ResultDocument::from_json(text) {
        for kind in [ReportKind::Scatter, ReportKind::Bars] {
            let _ = render_csv(&doc, kind);
            let _ = render_svg(&doc, kind);
        }
        let _ = doc.to_csv();
        let again = ResultDocument::from_json(&doc.to_json()).expect("serialized document reparses");
        assert_eq!(again.to_json(), doc.to_json());
    }
}

pub fn manifest(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::from_json(text) {
        assert_eq!(
            RunManifest::from_json(&m.to_json()).expect("serialized manifest reparses"),
            m
        );
    }
}

pub fn bitvector(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = text.parse::<BitVector>() {
        assert_eq!(v.to_string(), text);
        assert_eq!(v.count_ones(), text.bytes().filter(|&b| b == b'1').count());
    }
}

pub fn option_strings(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = text.parse::<RadiusPolicy>() {
        assert_eq!(p.to_string().parse::<RadiusPolicy>(), Ok(p));
    }
    if let Ok(m) = text.parse::<CorruptionMode>() {
        assert_eq!(m.to_string().parse::<CorruptionMode>(), Ok(m));
    }
}

pub type Target = (&'static str, fn(&[u8]));

/// Target name (as under `corpus/`) and body.
pub const TARGETS: [Target; 6] = [
    ("parse_dataset_csv", dataset_csv),
    ("parse_dataset_json", dataset_json),
    ("parse_result_json", result_json),
    ("parse_manifest", manifest),
    ("parse_bitvector", bitvector),
    ("parse_option_strings", option_strings),
];
