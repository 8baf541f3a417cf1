//! Rule-based stand-in for the LLM, used by the mock provider when no
//! recorded fixture matches a prompt. Every task reads the structured
//! `payload` of its request and answers deterministically.

use serde_json::{json, Value};

use super::{ProviderError, StructuredRequest};
use crate::{extraction, organization, storygen, text};

pub fn respond(req: &StructuredRequest) -> Result<Value, ProviderError> {
    let p = &req.payload;
    match req.task_name.as_str() {
        "expand_query" => Ok(expand_query(p)),
        "filter_boilerplate" => Ok(extraction::filter::offline_boilerplate(p)),
        "filter_relevance" => Ok(extraction::filter::offline_relevance(p)),
        "identify_facts" => Ok(extraction::identify::offline_identify(p)),
        "extract_data_points" => Ok(extraction::datapoints::offline_data_points(p)),
        "validate_facts" => Ok(extraction::validate::offline_validate(p)),
        "refine_facts" => Ok(extraction::validate::offline_refine(p)),
        "topic_initial" => Ok(organization::labels::offline_topic(p)),
        "cluster_summary" => Ok(organization::labels::offline_summary(p)),
        "topic_refine" => Ok(organization::labels::offline_refine(p)),
        "build_fact_sets" => Ok(organization::factsets::offline_fact_sets(p)),
        "merge_fact_sets" => Ok(organization::merge::offline_merge(p)),
        "detect_entities" => Ok(organization::entities::offline_entities(p)),
        "fill_entity" => Ok(organization::entities::offline_fill(p)),
        "validate_entity_fill" => Ok(organization::entities::offline_fill_check(p)),
        "narrative" => Ok(storygen::narrative::offline_narrative(p)),
        "recommend_chart" => Ok(storygen::chart::offline_chart(p)),
        "order_units" => Ok(storygen::offline_order(p)),
        other => Err(ProviderError::ProviderUnavailable(format!("no offline responder for task {other:?}"))),
    }
}

fn str_field<'a>(p: &'a Value, key: &str) -> &'a str {
    p.get(key).and_then(Value::as_str).unwrap_or_default()
}

fn expand_query(p: &Value) -> Value {
    const TEMPLATES: [&str; 6] = [
        "{} statistics",
        "{} trends data",
        "{} survey results",
        "{} growth figures",
        "{} facts and figures",
        "{} research numbers",
    ];
    let core = text::content_words(str_field(p, "query")).join(" ");
    let n = p.get("n").and_then(Value::as_u64).unwrap_or(2) as usize;
    let avoid: Vec<String> = p
        .get("avoid")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_lowercase).collect())
        .unwrap_or_default();
    let variants: Vec<String> = TEMPLATES
        .iter()
        .map(|t| t.replace("{}", &core).trim().to_string())
        .filter(|v| !avoid.contains(&v.to_lowercase()))
        .take(n)
        .collect();
    json!({ "variants": variants })
}
