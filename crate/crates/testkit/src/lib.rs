//! Test support shared by the workspace's integration and acceptance
//! suites: independent oracles, data generators and fixture helpers.

pub mod corpus;
pub mod invariants;
pub mod llm;
pub mod oracle;
pub mod worked;

use std::path::PathBuf;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("workspace root exists")
}

pub fn fixture(rel: &str) -> PathBuf {
    workspace_root().join("fixtures").join(rel)
}

pub fn golden_story_path() -> PathBuf {
    fixture("golden/homeschooling.story.json")
}

/// One row of the hand-derived normalizer table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantityCase {
    pub token: String,
    pub value: String,
    pub unit: String,
}

pub fn quantity_cases() -> Vec<QuantityCase> {
    let text = std::fs::read_to_string(fixture("oracles/quantity_cases.tsv")).expect("quantity table");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut cols = l.split('\t');
            QuantityCase {
                token: cols.next().unwrap_or_default().to_string(),
                value: cols.next().unwrap_or_default().to_string(),
                unit: cols.next().unwrap_or_default().to_string(),
            }
        })
        .collect()
}
