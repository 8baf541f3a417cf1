//! Canonical JSON encoding of the Story Document and its JSON Schema.

use std::hash::Hasher;
use std::sync::LazyLock;

use fnv::FnvHasher;
use serde_json::Value;
use thiserror::Error;

use crate::model::StoryDocument;

/// The shipped `story.v1.json` schema.
pub const STORY_SCHEMA: &str = include_str!("../../../schemas/story.v1.json");

pub const TOP_LEVEL_KEYS: [&str; 9] =
    ["story_id", "query", "expanded_queries", "articles", "clusters", "units", "links", "stats", "created_at"];

#[derive(Debug, Error)]
pub enum WireError {
    #[error("malformed story JSON: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("story does not match schema: {}", .0.join("; "))]
    Schema(Vec<String>),
}

static VALIDATOR: LazyLock<jsonschema::Validator> = LazyLock::new(|| {
    let schema: Value = serde_json::from_str(STORY_SCHEMA).expect("story schema is valid JSON");
    jsonschema::validator_for(&schema).expect("story schema compiles")
});

/// Sorted keys, two-space indent, trailing newline. Serializing the same
/// document twice gives identical bytes.
pub fn to_canonical_json(doc: &StoryDocument) -> String {
    // serde_json::Value keeps object keys in a BTreeMap, so going through it
    // sorts every level.
    let value = serde_json::to_value(doc).expect("story documents always serialize");
    let mut out = serde_json::to_string_pretty(&value).expect("values always serialize");
    out.push('\n');
    out
}

/// Every schema violation in `doc`, as "message at /path".
pub fn schema_errors(doc: &Value) -> Vec<String> {
    VALIDATOR.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path)).collect()
}

/// Parses and schema-checks a story.
pub fn from_json(text: &str) -> Result<StoryDocument, WireError> {
    let value: Value = serde_json::from_str(text)?;
    let errors = schema_errors(&value);
    if !errors.is_empty() {
        return Err(WireError::Schema(errors));
    }
    Ok(serde_json::from_value(value)?)
}

/// Stable story id from the query, seed and article urls.
pub fn story_id_for(query: &str, seed: u64, urls: &[&str]) -> String {
    let mut h = FnvHasher::default();
    h.write(query.trim().as_bytes());
    h.write_u8(0);
    h.write_u64(seed);
    for u in urls {
        h.write(u.as_bytes());
        h.write_u8(0);
    }
    format!("s{:016x}", h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_requires_exact_top_level_keys() {
        let schema: Value = serde_json::from_str(STORY_SCHEMA).unwrap();
        let mut required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        let mut props: Vec<&str> = schema["properties"].as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = TOP_LEVEL_KEYS.to_vec();
        required.sort_unstable();
        props.sort_unstable();
        want.sort_unstable();
        assert_eq!(required, want);
        assert_eq!(props, want);
        assert_eq!(schema["additionalProperties"], Value::Bool(false));
    }

    #[test]
    fn decimals_must_be_strings() {
        let doc = serde_json::json!({
            "story_id": "s1", "query": "q", "expanded_queries": [], "articles": [], "clusters": [], "units": [],
            "links": [], "created_at": "2025-01-01T00:00:00Z",
            "stats": {"total_articles": 0, "total_facts": 0, "total_clusters": 0, "shown_clusters_default": 0,
                      "shown_facts_default": 0, "contributing_articles_default": 0}
        });
        assert!(schema_errors(&doc).is_empty());
        let mut extra = doc.clone();
        extra["extra"] = Value::Bool(true);
        assert!(!schema_errors(&extra).is_empty());
        let schema: Value = serde_json::from_str(STORY_SCHEMA).unwrap();
        let decimal = jsonschema::validator_for(&schema["$defs"]["decimal"]).unwrap();
        assert!(decimal.is_valid(&serde_json::json!("-0.125")));
        assert!(!decimal.is_valid(&serde_json::json!(0.125)));
        assert!(!decimal.is_valid(&serde_json::json!("1e5")));
    }

    #[test]
    fn story_ids_are_stable() {
        let a = story_id_for("homeschooling", 42, &["https://x/1"]);
        assert_eq!(a, story_id_for(" homeschooling ", 42, &["https://x/1"]));
        assert_ne!(a, story_id_for("homeschooling", 43, &["https://x/1"]));
        assert_eq!(a.len(), 17);
    }
}
