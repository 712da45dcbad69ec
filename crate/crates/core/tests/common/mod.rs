#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dsc_core::context::{load_overrides, select_context_factors, CfRegistry};
use dsc_core::corpus::{Corpus, SourceNames};
use dsc_core::jsonl;
use dsc_core::relevance::{load_profiles, StaticInterestProfile};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn group1(file: &str) -> PathBuf {
    fixtures().join("group1").join(file)
}

/// Role ids in roster order, with the reference Event-80 scores.
pub const ROSTER: [&str; 14] = [
    "T1TM", "T1QR", "T1SR", "T1DS1", "T1DS2", "T2M", "T2QR", "T2SR", "T2DS1", "T2DS2", "T3M",
    "T3QR", "T3SR", "T3DS",
];

pub const EVENT80_DSC: [f64; 14] = [
    0.7654, 0.3141, 0.4218, 0.2456, 0.0405, 0.4748, 0.1224, 0.1099, 0.0551, 0.0689, 0.4129,
    0.2465, 0.2424, 0.0912,
];
/// Second printing of the Team2 manager score.
pub const EVENT80_T2M_ALT: f64 = 0.4784;

pub const EVENT80_STATIC: [u32; 14] = [12, 4, 8, 5, 5, 12, 5, 8, 5, 6, 5, 5, 9, 4];

pub const EVENT80_TRUTH: [&str; 5] = ["T1TM", "T1QR", "T1SR", "T2M", "T3M"];

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Corpus built from the raw event dump filtered by the selection list.
pub fn group1_corpus() -> Corpus {
    let selection: BTreeSet<String> = std::fs::read_to_string(group1("select.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.trim().to_string())
        .collect();
    let mut corpus = Corpus::from_records(
        jsonl::read_file(&group1("roles.jsonl")).unwrap(),
        jsonl::read_file(&group1("events_raw.jsonl")).unwrap(),
        jsonl::read_file(&group1("links.jsonl")).unwrap(),
        Some(&selection),
        &SourceNames::default(),
    )
    .unwrap();
    corpus.freeze();
    corpus
}

pub fn group1_registry(corpus: &Corpus) -> CfRegistry {
    let overrides = load_overrides(&group1("overrides.jsonl")).unwrap();
    let selection = select_context_factors(corpus, 64, &overrides).unwrap();
    assert!(selection.warnings.is_empty(), "{:?}", selection.warnings);
    selection.registry
}

pub fn group1_profiles(registry: &CfRegistry) -> Vec<StaticInterestProfile> {
    let (profiles, warnings) = load_profiles(&group1("profiles.jsonl"), registry).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    profiles
}
