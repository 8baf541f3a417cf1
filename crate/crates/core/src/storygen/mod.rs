//! Turns organized facts into the Story Document: narrative units, charts,
//! ordering, shared-article links and summary statistics.

pub mod chart;
pub mod narrative;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use rust_decimal::Decimal;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{id_order, Article, Cluster, ClusterLink, NarrativeUnit, StoryDocument};
use crate::organization::MergedFactSet;
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::validation::{recompute_stats, validate_story_document, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoryError {
    #[error("story violates {} invariant(s): {}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    AssemblyInvariantViolation(Vec<Violation>),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Cluster ids by relevance, highest first; ties to the lower id.
pub fn order_clusters(clusters: &[Cluster]) -> Vec<String> {
    let mut refs: Vec<&Cluster> = clusters.iter().collect();
    refs.sort_by(|a, b| b.relevance.cmp(&a.relevance).then_with(|| id_order(&a.id, &b.id)));
    refs.into_iter().map(|c| c.id.clone()).collect()
}

/// A composed unit waiting for its position.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDraft {
    pub unit: NarrativeUnit,
    /// Highest relevance among the unit's member facts.
    pub relevance: Decimal,
}

const ORDER_PROMPT: &str = "These narrative units belong to one theme of a data story. Order them so the \
story reads as a coherent sequence with smooth transitions, starting with the most important. Return every \
unit id exactly once.\n\n{units}\n\nAnswer with JSON {\"order\": [\"u1\", \"u2\"]}.";

pub fn order_request(drafts: &[&UnitDraft]) -> StructuredRequest {
    let listing = drafts
        .iter()
        .map(|d| format!("- {}: {}. {}", d.unit.id, d.unit.title, d.unit.caption_html))
        .collect::<Vec<_>>()
        .join("\n");
    let units: Vec<Value> = drafts.iter().map(|d| json!({"id": d.unit.id, "title": d.unit.title})).collect();
    let mut req = StructuredRequest::new("order_units", "unit_order", ORDER_PROMPT.replace("{units}", &listing), json!({"units": units}));
    req.max_retries = 2;
    req
}

fn check_permutation(doc: &Value, ids: &[String]) -> Result<(), String> {
    let got: Vec<&str> = doc["order"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    let mut a: Vec<&str> = got.clone();
    let mut b: Vec<&str> = ids.iter().map(String::as_str).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(format!("order {got:?} is not a permutation of {b:?}"));
    }
    Ok(())
}

/// Unit ids of one cluster in reading order. Starts from relevance order;
/// the model may reorder, and an invalid permutation after one retry keeps
/// the relevance order.
pub fn order_units_within_cluster(providers: &Providers, drafts: &[&UnitDraft]) -> Result<Vec<String>, ProviderError> {
    let mut initial: Vec<&UnitDraft> = drafts.to_vec();
    initial.sort_by(|a, b| b.relevance.cmp(&a.relevance).then_with(|| id_order(&a.unit.id, &b.unit.id)));
    let fallback: Vec<String> = initial.iter().map(|d| d.unit.id.clone()).collect();
    if initial.len() <= 1 {
        return Ok(fallback);
    }
    match providers.complete_checked(&order_request(&initial), |d| check_permutation(d, &fallback)) {
        Ok(doc) => Ok(doc["order"].as_array().into_iter().flatten().filter_map(|v| v.as_str().map(str::to_string)).collect()),
        Err(ProviderError::SchemaViolationAfterRetries { last_error, .. }) => {
            tracing::warn!(%last_error, "unit order rejected, keeping relevance order");
            Ok(fallback)
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn offline_order(p: &Value) -> Value {
    let order: Vec<Value> = p["units"].as_array().into_iter().flatten().map(|u| u["id"].clone()).collect();
    json!({ "order": order })
}

/// One link per cluster pair sharing at least one source article. Pairs
/// follow the given cluster order.
pub fn compute_shared_links(clusters: &[Cluster]) -> Vec<ClusterLink> {
    let sources: Vec<BTreeSet<&str>> = clusters.iter().map(|c| c.facts.iter().map(|f| f.article_id.as_str()).collect()).collect();
    let mut links = Vec::new();
    for i in 0..clusters.len() {
        for j in i + 1..clusters.len() {
            let mut shared: Vec<String> = sources[i].intersection(&sources[j]).map(|s| s.to_string()).collect();
            if shared.is_empty() {
                continue;
            }
            shared.sort_by(|a, b| id_order(a, b));
            links.push(ClusterLink {
                cluster_a: clusters[i].id.clone(),
                cluster_b: clusters[j].id.clone(),
                weight: shared.len(),
                shared_article_ids: shared,
            });
        }
    }
    links
}

/// Narrative and chart for one merged set. The unit id is the merged set id.
pub fn compose_unit(providers: &Providers, merged: &MergedFactSet, cluster: &Cluster) -> Result<UnitDraft, ProviderError> {
    let story = narrative::generate_narrative(providers, merged)?;
    let chart = chart::recommend_chart(providers, merged)?;
    let member_facts: BTreeSet<&str> = cluster
        .fact_sets
        .iter()
        .filter(|s| merged.fact_set_ids.contains(&s.id))
        .flat_map(|s| s.fact_ids.iter().map(String::as_str))
        .collect();
    let facts: Vec<_> = cluster.facts.iter().filter(|f| member_facts.contains(f.id.as_str())).collect();
    let mut sources: Vec<String> = facts.iter().map(|f| f.article_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    sources.sort_by(|a, b| id_order(a, b));
    Ok(UnitDraft {
        relevance: facts.iter().map(|f| f.relevance).max().unwrap_or_default(),
        unit: NarrativeUnit {
            id: merged.id.clone(),
            cluster_id: merged.cluster_id.clone(),
            fact_set_ids: merged.fact_set_ids.clone(),
            title: story.title,
            caption_html: story.caption_html,
            chart,
            source_article_ids: sources,
            order_in_cluster: 0,
        },
    })
}

/// Composes every unit, concurrently. Returned in merged-set order.
pub fn compose_units(providers: &Providers, merged: &[MergedFactSet], clusters: &[Cluster]) -> Result<Vec<UnitDraft>, ProviderError> {
    let by_id: BTreeMap<&str, &Cluster> = clusters.iter().map(|c| (c.id.as_str(), c)).collect();
    merged
        .par_iter()
        .map(|m| {
            let cluster = by_id
                .get(m.cluster_id.as_str())
                .ok_or_else(|| ProviderError::InvalidRequest(format!("merged set {} has no cluster", m.id)))?;
            compose_unit(providers, m, cluster)
        })
        .collect()
}

pub struct StoryParts {
    pub story_id: String,
    pub query: String,
    pub expanded_queries: Vec<String>,
    pub articles: Vec<Article>,
    pub clusters: Vec<Cluster>,
    pub units: Vec<UnitDraft>,
    pub created_at: DateTime<Utc>,
}

/// Applies cluster and unit order, computes links and stats, and checks the
/// result. Unit order within each cluster comes from
/// [`order_units_within_cluster`].
pub fn assemble_story(providers: &Providers, parts: StoryParts) -> Result<StoryDocument, StoryError> {
    let order = order_clusters(&parts.clusters);
    let mut by_id: BTreeMap<String, Cluster> = parts.clusters.into_iter().map(|c| (c.id.clone(), c)).collect();
    let clusters: Vec<Cluster> = order.iter().filter_map(|id| by_id.remove(id)).collect();

    let mut per_cluster: BTreeMap<&str, Vec<&UnitDraft>> = BTreeMap::new();
    for d in &parts.units {
        per_cluster.entry(d.unit.cluster_id.as_str()).or_default().push(d);
    }
    let unit_orders: Vec<(String, Vec<String>)> = clusters
        .par_iter()
        .map(|c| {
            let drafts = per_cluster.get(c.id.as_str()).cloned().unwrap_or_default();
            order_units_within_cluster(providers, &drafts).map(|o| (c.id.clone(), o))
        })
        .collect::<Result<_, _>>()?;
    let mut drafts: BTreeMap<String, NarrativeUnit> = parts.units.into_iter().map(|d| (d.unit.id.clone(), d.unit)).collect();
    let mut units = Vec::new();
    for (_, ids) in unit_orders {
        for (pos, id) in ids.iter().enumerate() {
            if let Some(mut u) = drafts.remove(id) {
                u.order_in_cluster = pos;
                units.push(u);
            }
        }
    }
    units.extend(drafts.into_values());

    let links = compute_shared_links(&clusters);
    let mut doc = StoryDocument {
        story_id: parts.story_id,
        query: parts.query,
        expanded_queries: parts.expanded_queries,
        articles: parts.articles,
        clusters,
        units,
        links,
        stats: Default::default(),
        created_at: parts.created_at,
    };
    doc.stats = recompute_stats(&doc);
    let violations = validate_story_document(&doc);
    if !violations.is_empty() {
        return Err(StoryError::AssemblyInvariantViolation(violations));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fact, FactStatus};

    fn cluster(id: &str, rel: &str, articles: &[&str]) -> Cluster {
        let facts: Vec<Fact> = articles
            .iter()
            .enumerate()
            .map(|(i, a)| Fact {
                id: format!("{id}f{i}"),
                article_id: a.to_string(),
                paragraph_index: 0,
                content: "1".into(),
                data_points: vec![],
                relevance: rel.parse().unwrap(),
                embedding: vec![],
                status: FactStatus::Validated,
            })
            .collect();
        Cluster {
            id: id.into(),
            topic: String::new(),
            summary: String::new(),
            fact_ids: facts.iter().map(|f| f.id.clone()).collect(),
            relevance: rel.parse().unwrap(),
            representative_fact_id: String::new(),
            top_fact_ids: vec![],
            facts,
            fact_sets: vec![],
        }
    }

    #[test]
    fn cluster_order() {
        let cs = [cluster("c1", "0.7", &[]), cluster("c2", "0.9", &[]), cluster("c3", "0.8", &[])];
        assert_eq!(order_clusters(&cs), vec!["c2", "c3", "c1"]);
        let eq = [cluster("c2", "0.5", &[]), cluster("c1", "0.5", &[]), cluster("c10", "0.5", &[])];
        assert_eq!(order_clusters(&eq), vec!["c1", "c2", "c10"]);
    }

    #[test]
    fn links() {
        let cs = [cluster("A", "1", &["a1", "a2", "a3"]), cluster("B", "1", &["a2", "a3", "a4"]), cluster("C", "1", &["a9"])];
        let links = compute_shared_links(&cs);
        assert_eq!(links.len(), 1);
        assert_eq!((links[0].weight, links[0].shared_article_ids.clone()), (2, vec!["a2".to_string(), "a3".into()]));
        let all = [cluster("A", "1", &["a1"]), cluster("B", "1", &["a1"]), cluster("C", "1", &["a1", "a2"])];
        let links = compute_shared_links(&all);
        assert_eq!(links.len(), 3);
        assert!(links.iter().all(|l| l.shared_article_ids == vec!["a1".to_string()]));
    }
}
