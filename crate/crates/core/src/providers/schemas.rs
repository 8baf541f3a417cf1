//! Output schemas registered for structured LLM calls. The same JSON Schema
//! is sent to live models as the response format and used to validate every
//! response, live or mock.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use jsonschema::Validator;
use serde_json::{json, Value};

fn obj(required: &[&str], properties: Value) -> Value {
    json!({
        "type": "object",
        "required": required,
        "properties": properties,
    })
}

fn string_array() -> Value {
    json!({"type": "array", "items": {"type": "string"}})
}

fn data_point_schema() -> Value {
    obj(
        &["label", "value", "unit"],
        json!({
            "label": {"type": "string", "minLength": 1},
            "value": {"type": "string", "minLength": 1},
            "unit": {"type": "string"},
            "series_key": {"type": ["string", "null"]},
        }),
    )
}

fn definitions() -> Vec<(&'static str, Value)> {
    vec![
        ("query_variants", obj(&["variants"], json!({"variants": string_array()}))),
        (
            "paragraph_selection",
            obj(&["keep"], json!({"keep": {"type": "array", "items": {"type": "integer", "minimum": 0}}})),
        ),
        (
            "fact_contents",
            obj(
                &["facts"],
                json!({"facts": {"type": "array", "items": obj(&["content"], json!({
                    "content": {"type": "string", "minLength": 1},
                    "fact_type": {"type": "string"},
                }))}}),
            ),
        ),
        (
            "data_points",
            obj(&["data_points"], json!({"data_points": {"type": "array", "items": data_point_schema()}})),
        ),
        (
            "validation_report",
            obj(
                &["issues"],
                json!({"issues": {"type": "array", "items": obj(
                    &["fact_id", "kind", "detail", "suggested_fix"],
                    json!({
                        "fact_id": {"type": "string"},
                        "kind": {"enum": ["content_mismatch", "wrong_value", "missing_data_point", "unit_inconsistency", "ambiguous_reference"]},
                        "detail": {"type": "string"},
                        "suggested_fix": {"type": "string"},
                        "data_point": {"type": ["integer", "null"], "minimum": 0},
                    }),
                )}}),
            ),
        ),
        (
            "refined_facts",
            obj(
                &["facts"],
                json!({"facts": {"type": "array", "items": obj(
                    &["id", "content", "data_points"],
                    json!({
                        "id": {"type": "string"},
                        "content": {"type": "string", "minLength": 1},
                        "data_points": {"type": "array", "items": data_point_schema()},
                    }),
                )}}),
            ),
        ),
        ("cluster_topic", obj(&["topic"], json!({"topic": {"type": "string", "minLength": 1}}))),
        ("cluster_summary", obj(&["summary"], json!({"summary": {"type": "string", "minLength": 1}}))),
        (
            "topic_refinement",
            obj(
                &["topics"],
                json!({"topics": {"type": "array", "items": obj(
                    &["cluster_id", "topic"],
                    json!({"cluster_id": {"type": "string"}, "topic": {"type": "string", "minLength": 1}}),
                )}}),
            ),
        ),
        (
            "fact_sets",
            obj(
                &["sets"],
                json!({"sets": {"type": "array", "items": obj(
                    &["fact_ids", "canonical_content"],
                    json!({
                        "fact_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "canonical_content": {"type": "string"},
                        "conflicting": {"type": "boolean"},
                    }),
                )}}),
            ),
        ),
        (
            "merge_proposals",
            obj(
                &["groups"],
                json!({"groups": {"type": "array", "items": obj(
                    &["fact_set_ids", "merged_content"],
                    json!({
                        "fact_set_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "merged_content": {"type": "string"},
                    }),
                )}}),
            ),
        ),
        (
            "entities",
            obj(
                &["entities"],
                json!({"entities": {"type": "array", "items": obj(
                    &["text", "kind"],
                    json!({
                        "text": {"type": "string", "minLength": 1},
                        "kind": {"enum": ["GPE", "DATE", "ORG", "PERSON", "PERCENT", "MONEY", "QUANTITY", "CARDINAL", "OTHER"]},
                    }),
                )}}),
            ),
        ),
        (
            "entity_fill",
            obj(
                &["found"],
                json!({
                    "found": {"type": "boolean"},
                    "value": {"type": "string"},
                    "phrase": {"type": "string"},
                }),
            ),
        ),
        (
            "fill_validation",
            obj(&["ok"], json!({"ok": {"type": "boolean"}, "detail": {"type": "string"}})),
        ),
        (
            "narrative",
            obj(
                &["title", "caption_html"],
                json!({"title": {"type": "string", "minLength": 1}, "caption_html": {"type": "string", "minLength": 1}}),
            ),
        ),
        (
            "chart_choice",
            obj(
                &["kind"],
                json!({
                    "kind": {"enum": ["bar", "pie", "line", "isotype", "range", "text"]},
                    "x_label": {"type": "string"},
                    "y_label": {"type": "string"},
                }),
            ),
        ),
        ("unit_order", obj(&["order"], json!({"order": string_array()}))),
    ]
}

struct Registry {
    schemas: BTreeMap<&'static str, Value>,
    validators: BTreeMap<&'static str, Validator>,
}

static REGISTRY: LazyLock<Registry> = LazyLock::new(|| {
    let mut schemas = BTreeMap::new();
    let mut validators = BTreeMap::new();
    for (name, schema) in definitions() {
        let v = jsonschema::validator_for(&schema).expect("registered schema compiles");
        validators.insert(name, v);
        schemas.insert(name, schema);
    }
    Registry { schemas, validators }
});

pub fn schema(name: &str) -> Option<&'static Value> {
    REGISTRY.schemas.get(name)
}

pub fn is_registered(name: &str) -> bool {
    REGISTRY.schemas.contains_key(name)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    REGISTRY.schemas.keys().copied()
}

/// Validates `doc` against schema `name`; the error lists every violation.
pub fn check(name: &str, doc: &Value) -> Result<(), String> {
    let validator = REGISTRY
        .validators
        .get(name)
        .ok_or_else(|| format!("unknown schema {name:?}"))?;
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_schemas_compile() {
        assert!(names().count() >= 17);
        assert!(is_registered("data_points"));
    }

    #[test]
    fn missing_required_field_is_reported() {
        let err = check("narrative", &json!({"title": "x"})).unwrap_err();
        assert!(err.contains("caption_html"), "{err}");
        assert!(check("narrative", &json!({"title": "x", "caption_html": "y"})).is_ok());
    }
}
