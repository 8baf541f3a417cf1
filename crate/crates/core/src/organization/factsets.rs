//! Fact sets: facts inside one cluster that assert the same claim.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;
use serde_json::{json, Value};

use super::relevance::by_relevance;
use crate::extraction::quantity::{magnitude, unit_family};
use crate::model::{id_order, Fact, FactSet};
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

/// Minimum stem overlap for two differently-valued facts to count as the
/// same claim.
const CONFLICT_OVERLAP: f64 = 0.6;

const FACT_SET_PROMPT: &str = "Group the facts below by the claim they make. Facts belong to the same group \
when they state the same quantity about the same subject and time, even when the wording or number \
formatting differs (\"3.7 million\" and \"3,700,000\" are the same value). Facts that make the same claim \
with different values must stay in separate groups; mark those groups as conflicting. Every fact must \
appear in exactly one group. For each group give a canonical content sentence.\n\n{facts}\n\n\
Answer with JSON {\"sets\": [{\"fact_ids\": [\"...\"], \"canonical_content\": \"...\", \"conflicting\": false}]}.";

pub fn fact_set_request(facts: &[&Fact]) -> StructuredRequest {
    let listing = facts.iter().map(|f| format!("- {}: {}", f.id, f.content)).collect::<Vec<_>>().join("\n");
    let payload: Vec<Value> = facts
        .iter()
        .map(|f| json!({"id": f.id, "content": f.content, "data_points": f.data_points}))
        .collect();
    StructuredRequest::new("build_fact_sets", "fact_sets", FACT_SET_PROMPT.replace("{facts}", &listing), json!({"facts": payload}))
}

fn check_partition(doc: &Value, known: &BTreeSet<&str>) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for set in doc["sets"].as_array().into_iter().flatten() {
        let ids = set["fact_ids"].as_array().map(Vec::as_slice).unwrap_or_default();
        if ids.is_empty() {
            return Err("a set has no fact ids".into());
        }
        for id in ids.iter().filter_map(Value::as_str) {
            if !known.contains(id) {
                return Err(format!("unknown fact id {id:?}"));
            }
            if !seen.insert(id) {
                return Err(format!("fact {id} appears in more than one set"));
            }
        }
    }
    let missing: Vec<&&str> = known.difference(&seen).collect();
    if !missing.is_empty() {
        return Err(format!("facts {missing:?} are in no set"));
    }
    Ok(())
}

/// Values a fact asserts, scale-free, keyed by series key.
type ValueSignature = Vec<(Option<String>, Decimal)>;

fn value_signature(f: &Fact) -> ValueSignature {
    let mut sig: Vec<_> = f
        .data_points
        .iter()
        .map(|p| (p.series_key.clone(), magnitude(p.value, &p.unit).normalize()))
        .collect();
    sig.sort();
    sig
}

fn claim_shape(f: &Fact) -> (Vec<Option<String>>, String) {
    let mut keys: Vec<_> = f.data_points.iter().map(|p| p.series_key.clone()).collect();
    keys.sort();
    let family = f.data_points.first().map(|p| unit_family(&p.unit).to_string()).unwrap_or_default();
    (keys, family)
}

/// Builds the fact sets of one cluster. Sets come back in order of their
/// earliest fact and carry empty ids. A proposed set whose members assert
/// different values is split by value and every part marked conflicting.
pub fn build_fact_sets(providers: &Providers, cluster_id: &str, facts: &[&Fact]) -> Result<Vec<FactSet>, ProviderError> {
    let mut facts = facts.to_vec();
    facts.sort_by(|a, b| id_order(&a.id, &b.id));
    let by_id: BTreeMap<&str, &Fact> = facts.iter().map(|f| (f.id.as_str(), *f)).collect();
    let groups: Vec<(Vec<&Fact>, bool)> = if facts.len() <= 1 {
        facts.iter().map(|f| (vec![*f], false)).collect()
    } else {
        let known: BTreeSet<&str> = by_id.keys().copied().collect();
        let doc = providers.complete_checked(&fact_set_request(&facts), |d| check_partition(d, &known))?;
        doc["sets"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|s| {
                let members = s["fact_ids"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter_map(|id| by_id.get(id.as_str()?).copied())
                    .collect();
                (members, s["conflicting"].as_bool().unwrap_or(false))
            })
            .collect()
    };
    let mut sets = Vec::new();
    for (members, conflicting) in groups {
        let mut by_value: Vec<(ValueSignature, Vec<&Fact>)> = Vec::new();
        for f in members {
            let sig = value_signature(f);
            match by_value.iter_mut().find(|(s, _)| *s == sig) {
                Some((_, g)) => g.push(f),
                None => by_value.push((sig, vec![f])),
            }
        }
        let split = by_value.len() > 1;
        if split {
            tracing::info!(cluster_id, "fact set mixes values, split into conflicting sets");
        }
        for (_, mut group) in by_value {
            group.sort_by(|a, b| id_order(&a.id, &b.id));
            let canonical = by_relevance(&group)[0].content.clone();
            sets.push(FactSet {
                id: String::new(),
                cluster_id: cluster_id.to_string(),
                fact_ids: group.iter().map(|f| f.id.clone()).collect(),
                canonical_content: canonical,
                conflicting: conflicting || split,
            });
        }
    }
    sets.sort_by(|a, b| id_order(&a.fact_ids[0], &b.fact_ids[0]));
    Ok(sets)
}

pub(crate) fn offline_fact_sets(p: &Value) -> Value {
    let facts: Vec<Fact> = p["facts"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|f| {
            Some(Fact {
                id: f["id"].as_str()?.to_string(),
                article_id: String::new(),
                paragraph_index: 0,
                content: f["content"].as_str()?.to_string(),
                data_points: serde_json::from_value(f["data_points"].clone()).ok()?,
                relevance: Decimal::ZERO,
                embedding: Vec::new(),
                status: crate::model::FactStatus::Extracted,
            })
        })
        .collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, f) in facts.iter().enumerate() {
        let stems = text::stems(&f.content);
        let same = groups.iter().position(|g| {
            let head = &facts[g[0]];
            claim_shape(head) == claim_shape(f)
                && value_signature(head) == value_signature(f)
                && !text::stems(&head.content).is_disjoint(&stems)
        });
        match same {
            Some(g) => groups[g].push(i),
            None => groups.push(vec![i]),
        }
    }
    let conflicting: Vec<bool> = groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let head = &facts[g[0]];
            groups.iter().enumerate().any(|(gj, other)| {
                let o = &facts[other[0]];
                gi != gj
                    && claim_shape(head) == claim_shape(o)
                    && value_signature(head) != value_signature(o)
                    && text::stem_overlap(&head.content, &o.content) >= CONFLICT_OVERLAP
            })
        })
        .collect();
    let sets: Vec<Value> = groups
        .iter()
        .zip(conflicting)
        .map(|(g, c)| {
            json!({
                "fact_ids": g.iter().map(|&i| facts[i].id.clone()).collect::<Vec<_>>(),
                "canonical_content": facts[g[0]].content,
                "conflicting": c,
            })
        })
        .collect();
    json!({ "sets": sets })
}
